#include "rolerag/normalization.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rolerag/prompts.hpp"

namespace rolerag {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::string embed_input(const EntityRecord& record) {
    return record.name + "\n" + record.description;
}

}  // namespace

void AliasGraph::add_node(const std::string& name) {
    if (node_set_.insert(name).second) nodes.push_back(name);
}

void AliasGraph::add_edge(const std::string& a, const std::string& b) {
    if (a == b) throw InvalidInput("alias graph: self edge " + a);
    if (!has_node(a) || !has_node(b)) throw InvalidInput("alias graph: edge to missing node");
    edges.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
}

bool AliasGraph::has_node(const std::string& name) const { return node_set_.count(name) != 0; }

std::vector<std::vector<std::string>> connected_components(const AliasGraph& graph) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [a, b] : graph.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::set<std::string> seen;
    std::vector<std::vector<std::string>> components;
    for (const auto& start : graph.nodes) {
        if (seen.count(start)) continue;
        std::vector<std::string> component;
        std::deque<std::string> queue{start};
        seen.insert(start);
        while (!queue.empty()) {
            std::string cur = queue.front();
            queue.pop_front();
            component.push_back(cur);
            auto it = adj.find(cur);
            if (it == adj.end()) continue;
            for (const auto& next : it->second) {
                if (seen.insert(next).second) queue.push_back(next);
            }
        }
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
    }
    return components;
}

const std::string& NameMapping::canonical_of(const std::string& raw) const {
    auto it = canonical.find(raw);
    if (it == canonical.end()) throw NotFound("no canonical mapping for name: " + raw);
    return it->second;
}

bool NameMapping::contains(const std::string& raw) const { return canonical.count(raw) != 0; }

const std::string* NameMapping::find_canonical_ci(const std::string& raw) const {
    if (auto it = canonical.find(raw); it != canonical.end()) return &it->second;
    const std::string needle = upper(raw);
    for (const auto& [name, canon] : canonical) {
        if (upper(name) == needle) return &canon;
    }
    return nullptr;
}

void NameMapping::save_json(const std::string& path) const {
    nlohmann::ordered_json j;
    j["components"] = components;
    nlohmann::ordered_json canon = nlohmann::ordered_json::object();
    for (const auto& [raw, name] : canonical) canon[raw] = name;
    j["canonical"] = canon;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

NameMapping NameMapping::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    NameMapping mapping;
    mapping.components = j.at("components").get<std::vector<std::vector<std::string>>>();
    for (const auto& [raw, name] : j.at("canonical").items()) {
        mapping.canonical[raw] = name.get<std::string>();
    }
    return mapping;
}

Normalizer::Normalizer(Gateway& gateway, std::string judge_template,
                       std::string canonical_template, NormalizerConfig config)
    : gateway_(gateway),
      judge_template_(std::move(judge_template)),
      canonical_template_(std::move(canonical_template)),
      config_(config) {}

bool Normalizer::judge_same_entity(const EntityRecord& a, const EntityRecord& b) {
    CompletionRequest request;
    request.prompt = fill_template(judge_template_, {{"name_a", a.name},
                                                     {"description_a", a.description},
                                                     {"name_b", b.name},
                                                     {"description_b", b.description}});
    request.temperature = config_.temperature;
    request.max_output_tokens = 8;
    request.tag = "normalization";

    ++report_.judge_calls;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string verdict = upper(trim(gateway_.complete(request)));
        if (verdict.rfind("YES", 0) == 0) return true;
        if (verdict.rfind("NO", 0) == 0) return false;
        request.prompt += "\nAnswer strictly YES or NO.";
    }
    ++report_.unparseable_verdicts;
    return false;  // unparseable after one reprompt counts as NO
}

std::string Normalizer::elect_canonical_name(const std::vector<std::string>& component,
                                             const EntityStore& records) {
    if (component.empty()) throw InvalidInput("cannot elect a name for an empty component");
    if (component.size() == 1) return component.front();

    std::set<std::string> members(component.begin(), component.end());
    std::map<std::string, std::string> first_description;
    std::map<std::string, std::size_t> frequency;
    for (const auto& record : records) {
        if (!members.count(record.name)) continue;
        ++frequency[record.name];
        first_description.emplace(record.name, record.description);
    }

    std::string candidates;
    for (const auto& name : component) {
        candidates += "- " + name + ": " + first_description[name] + "\n";
    }
    CompletionRequest request;
    request.prompt = fill_template(canonical_template_, {{"candidates", candidates}});
    request.temperature = config_.temperature;
    request.max_output_tokens = 64;
    request.tag = "canonical";

    std::string answer;
    try {
        answer = trim(gateway_.complete(request));
    } catch (const TransportError&) {
        answer.clear();
    }
    for (const auto& name : component) {
        if (upper(name) == upper(answer)) return name;
    }

    // Non-member answer: fall back to the most frequent name, ties lexicographic.
    ++report_.canonical_fallbacks;
    std::string best = component.front();
    std::size_t best_count = frequency[best];
    for (const auto& name : component) {
        std::size_t count = frequency[name];
        if (count > best_count || (count == best_count && name < best)) {
            best = name;
            best_count = count;
        }
    }
    return best;
}

NameMapping Normalizer::normalize(const EntityStore& store, VectorIndex& index) {
    if (!index.empty()) throw InvalidInput("normalize requires an initially empty index");
    report_ = {};

    AliasGraph graph;
    std::map<std::string, EntityRecord> first_record;

    for (const auto& record : store) {
        if (record.name.empty()) throw InvalidInput("entity record with empty name");
        if (index.contains(record.name)) continue;  // duplicate surface name

        EmbeddingVector vec = gateway_.embed(embed_input(record));
        // Candidates come from the entities inserted so far.
        std::vector<SearchHit> candidates =
            index.empty() ? std::vector<SearchHit>{} : index.top_k(vec, config_.k);
        index.insert(record.name, vec);
        graph.add_node(record.name);
        first_record.emplace(record.name, record);

        for (const auto& hit : candidates) {
            if (hit.similarity < config_.similarity_floor) continue;
            const EntityRecord& other = first_record.at(hit.key);
            if (other.entity_type != record.entity_type) continue;
            if (judge_same_entity(record, other)) {
                graph.add_edge(record.name, hit.key);
            }
        }
    }

    NameMapping mapping;
    mapping.components = connected_components(graph);
    for (const auto& component : mapping.components) {
        std::string canonical = elect_canonical_name(component, store);
        for (const auto& name : component) mapping.canonical[name] = canonical;
    }
    report_.distinct_names = graph.nodes.size();
    report_.components = mapping.components.size();
    return mapping;
}

}  // namespace rolerag

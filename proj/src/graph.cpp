#include "rolerag/graph.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "rolerag/ingest.hpp"
#include "rolerag/prompts.hpp"

namespace rolerag {

bool KnowledgeGraph::has_node(const std::string& canonical_name) const {
    return nodes_.count(canonical_name) != 0;
}

const GraphNode& KnowledgeGraph::node(const std::string& canonical_name) const {
    auto it = nodes_.find(canonical_name);
    if (it == nodes_.end()) throw NotFound("graph node not found: " + canonical_name);
    return it->second;
}

std::optional<const GraphEdge*> KnowledgeGraph::edge_between(const std::string& a,
                                                             const std::string& b) const {
    auto it = adjacency_.find(a);
    if (it == adjacency_.end()) return std::nullopt;
    for (std::size_t edge_id : it->second) {
        const GraphEdge& e = edges_[edge_id];
        if ((e.source == a && e.target == b) || (e.source == b && e.target == a)) {
            return &e;
        }
    }
    return std::nullopt;
}

std::vector<NeighborFact> KnowledgeGraph::one_hop_neighbors(
    const std::string& canonical_name, const std::set<std::string>* type_filter) const {
    const GraphNode& center = node(canonical_name);
    (void)center;
    std::vector<NeighborFact> out;
    auto it = adjacency_.find(canonical_name);
    if (it == adjacency_.end()) return out;
    for (std::size_t edge_id : it->second) {
        const GraphEdge& e = edges_[edge_id];
        const std::string& other = e.source == canonical_name ? e.target : e.source;
        const GraphNode& n = node(other);
        if (type_filter && !type_filter->count(n.entity_type)) continue;
        out.push_back({&n, &e});
    }
    std::sort(out.begin(), out.end(), [](const NeighborFact& a, const NeighborFact& b) {
        if (a.edge->strength != b.edge->strength) return a.edge->strength > b.edge->strength;
        return a.node->canonical_name < b.node->canonical_name;
    });
    return out;
}

std::string KnowledgeGraph::character_profile(const std::string& character,
                                              std::size_t m) const {
    const GraphNode& center = node(character);
    std::string profile = center.merged_description;
    if (m == 0) return profile;
    std::vector<NeighborFact> neighbors = one_hop_neighbors(character);
    if (neighbors.empty()) return profile;
    profile += "\n\nKey relationships:";
    std::size_t emitted = 0;
    for (const auto& fact : neighbors) {
        if (emitted++ >= m) break;
        profile += "\n- " + fact.node->canonical_name + ": " + fact.edge->merged_description;
    }
    return profile;
}

void KnowledgeGraph::index_edges() {
    adjacency_.clear();
    for (auto& [name, node] : nodes_) node.degree = 0;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        adjacency_[edges_[i].source].push_back(i);
        adjacency_[edges_[i].target].push_back(i);
        ++nodes_.at(edges_[i].source).degree;
        ++nodes_.at(edges_[i].target).degree;
    }
}

void KnowledgeGraph::save_json(const std::string& path) const {
    nlohmann::ordered_json j;
    j["owner"] = owner_;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& name : node_order_) {
        const GraphNode& n = nodes_.at(name);
        j["nodes"].push_back({{"canonical_name", n.canonical_name},
                              {"entity_type", n.entity_type},
                              {"merged_description", n.merged_description},
                              {"source_names", n.source_names},
                              {"degree", n.degree}});
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : edges_) {
        j["edges"].push_back({{"source", e.source},
                              {"target", e.target},
                              {"merged_description", e.merged_description},
                              {"strength", e.strength}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

KnowledgeGraph KnowledgeGraph::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    KnowledgeGraph g;
    g.owner_ = j.at("owner").get<std::string>();
    for (const auto& n : j.at("nodes")) {
        GraphNode node;
        node.canonical_name = n.at("canonical_name");
        node.entity_type = n.at("entity_type");
        node.merged_description = n.at("merged_description");
        node.source_names = n.at("source_names").get<std::set<std::string>>();
        g.node_order_.push_back(node.canonical_name);
        g.nodes_[node.canonical_name] = std::move(node);
    }
    for (const auto& e : j.at("edges")) {
        g.edges_.push_back({e.at("source"), e.at("target"), e.at("merged_description"),
                            e.at("strength")});
    }
    g.index_edges();
    return g;
}

GraphBuilder::GraphBuilder(Gateway& gateway, std::string summarize_template,
                           GraphBuilderConfig config)
    : gateway_(gateway), summarize_template_(std::move(summarize_template)), config_(config) {}

std::string GraphBuilder::merge_descriptions(const std::vector<std::string>& texts,
                                             const std::string& subject) {
    if (texts.empty()) throw InvalidInput("merge_descriptions: empty input");
    if (texts.size() == 1) return texts.front();

    std::string joined;
    for (const auto& t : texts) {
        if (!joined.empty()) joined += "\n";
        joined += t;
    }
    if (count_tokens(joined) <= config_.merge_token_threshold) return joined;

    std::string descriptions;
    for (const auto& t : texts) descriptions += "- " + t + "\n";
    CompletionRequest request;
    request.prompt = fill_template(summarize_template_,
                                   {{"subject", subject}, {"descriptions", descriptions}});
    request.temperature = config_.temperature;
    request.max_output_tokens = 1024;
    request.tag = "summarize";
    try {
        ++summarize_calls_;
        std::string summary = gateway_.complete(request);
        if (!summary.empty()) return summary;
    } catch (const TransportError&) {
    }
    // Gateway failed or returned nothing: keep a truncated concatenation.
    ++summarize_fallbacks_;
    std::vector<Token> tokens = tokenize(joined);
    if (tokens.size() > config_.merge_token_threshold) {
        return joined.substr(0, tokens[config_.merge_token_threshold - 1].end);
    }
    return joined;
}

KnowledgeGraph GraphBuilder::build(const EntityStore& entities, const RelationStore& relations,
                                   const NameMapping& mapping,
                                   const std::string& owner_raw_name) {
    KnowledgeGraph graph;

    // Canonical node order follows first appearance in the entity store.
    std::map<std::string, std::vector<const EntityRecord*>> grouped;
    for (const auto& record : entities) {
        const std::string& canonical = mapping.canonical_of(record.name);
        if (!grouped.count(canonical)) graph.node_order_.push_back(canonical);
        grouped[canonical].push_back(&record);
    }

    for (const auto& canonical : graph.node_order_) {
        const auto& records = grouped.at(canonical);
        GraphNode node;
        node.canonical_name = canonical;
        std::map<std::string, std::size_t> type_counts;
        std::vector<std::string> descriptions;
        for (const EntityRecord* r : records) {
            ++type_counts[r->entity_type];
            node.source_names.insert(r->name);
            if (!r->description.empty()) descriptions.push_back(r->description);
        }
        node.entity_type = records.front()->entity_type;
        for (const auto& [type, count] : type_counts) {
            if (count > type_counts[node.entity_type]) node.entity_type = type;
        }
        if (descriptions.empty()) descriptions.push_back(canonical);
        node.merged_description = merge_descriptions(descriptions, canonical);
        graph.nodes_[canonical] = std::move(node);
    }

    // Relations collapse onto unordered canonical pairs; self-loops after
    // rewriting are dropped and counted.
    std::map<std::pair<std::string, std::string>, std::vector<const RelationRecord*>> edge_groups;
    std::vector<std::pair<std::string, std::string>> edge_order;
    for (const auto& record : relations) {
        const std::string* src_p = mapping.find_canonical_ci(record.source);
        const std::string* dst_p = mapping.find_canonical_ci(record.target);
        if (!src_p || !dst_p) {
            // Relation endpoint never extracted as an entity; skip.
            continue;
        }
        const std::string& src = *src_p;
        const std::string& dst = *dst_p;
        if (src == dst) {
            ++graph.dropped_self_loops_;
            continue;
        }
        if (!graph.nodes_.count(src) || !graph.nodes_.count(dst)) {
            continue;
        }
        auto key = src < dst ? std::make_pair(src, dst) : std::make_pair(dst, src);
        if (!edge_groups.count(key)) edge_order.push_back(key);
        edge_groups[key].push_back(&record);
    }
    for (const auto& key : edge_order) {
        const auto& records = edge_groups.at(key);
        GraphEdge edge;
        edge.source = key.first;
        edge.target = key.second;
        edge.strength = 0.0;
        std::vector<std::string> descriptions;
        for (const RelationRecord* r : records) {
            edge.strength = std::max(edge.strength, r->strength);
            if (!r->description.empty()) descriptions.push_back(r->description);
        }
        if (descriptions.empty()) descriptions.push_back(key.first + " - " + key.second);
        edge.merged_description =
            merge_descriptions(descriptions, key.first + " and " + key.second);
        graph.edges_.push_back(std::move(edge));
    }

    const std::string* owner = mapping.find_canonical_ci(owner_raw_name);
    if (!owner || !graph.nodes_.count(*owner)) {
        throw NotFound("owner character has no node in the graph: " + owner_raw_name);
    }
    graph.owner_ = *owner;
    graph.index_edges();
    return graph;
}

}  // namespace rolerag

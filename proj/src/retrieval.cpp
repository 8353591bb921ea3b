#include "rolerag/retrieval.hpp"

#include <algorithm>
#include <cctype>

#include "rolerag/ingest.hpp"
#include "rolerag/prompts.hpp"

namespace rolerag {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t next = s.find('\n', pos);
        if (next == std::string::npos) {
            lines.push_back(s.substr(pos));
            break;
        }
        lines.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return lines;
}

std::vector<std::string> split_fields(const std::string& s) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    const std::string sep = "<|>";
    while (true) {
        std::size_t next = s.find(sep, pos);
        if (next == std::string::npos) {
            fields.push_back(trim(s.substr(pos)));
            return fields;
        }
        fields.push_back(trim(s.substr(pos, next - pos)));
        pos = next + sep.size();
    }
}

std::string truncate_tokens(const std::string& text, std::size_t max_tokens) {
    std::vector<Token> tokens = tokenize(text);
    if (tokens.size() <= max_tokens) return text;
    if (max_tokens == 0) return "";
    return text.substr(0, tokens[max_tokens - 1].end);
}

std::string node_line(const GraphNode& node) {
    return node.canonical_name + "," + upper(node.entity_type) + ",\"" +
           node.merged_description + "\"";
}

std::string edge_line(const GraphEdge& edge) {
    return edge.source + "," + edge.target + ",\"" + edge.merged_description + "\"";
}

}  // namespace

std::vector<EntityMention> parse_mentions(const std::string& text, std::size_t* skipped) {
    std::vector<EntityMention> mentions;
    std::size_t bad = 0;
    for (std::string line : split_lines(text)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '(' && line.back() == ')') line = line.substr(1, line.size() - 2);
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 5 || fields[1].empty() || fields[2].empty()) {
            ++bad;
            continue;
        }
        EntityMention m;
        m.entity_type = lower(fields[0]);
        m.name = fields[1];
        m.rationale = fields[2];
        std::string relevant = lower(fields[3]);
        std::string spec = lower(fields[4]);
        if (relevant.rfind("yes", 0) == 0) {
            m.relevant = true;
        } else if (relevant.rfind("no", 0) == 0) {
            m.relevant = false;
        } else {
            ++bad;
            continue;
        }
        if (spec == "specific") {
            m.specificity = Specificity::specific;
        } else if (spec == "general") {
            m.specificity = Specificity::general;
        } else {
            ++bad;
            continue;
        }
        mentions.push_back(std::move(m));
    }
    if (skipped) *skipped = bad;
    return mentions;
}

Retriever::Retriever(Gateway& gateway, const KnowledgeGraph& graph, const VectorIndex& index,
                     const NameMapping& mapping, std::string hypothesize_template,
                     std::string analyze_template, RetrieverConfig config)
    : gateway_(gateway),
      graph_(graph),
      index_(index),
      mapping_(mapping),
      hypothesize_template_(std::move(hypothesize_template)),
      analyze_template_(std::move(analyze_template)),
      config_(config) {}

std::string Retriever::hypothesize(const std::string& query, const std::string& character) {
    CompletionRequest request;
    request.prompt = fill_template(hypothesize_template_,
                                   {{"question", query}, {"character", character}});
    request.temperature = config_.temperature;
    request.max_output_tokens = static_cast<int>(config_.hypothesis_max_tokens);
    request.tag = "hypothesize";
    try {
        return truncate_tokens(trim(gateway_.complete(request)), config_.hypothesis_max_tokens);
    } catch (const TransportError&) {
        return "";  // analysis proceeds on the query alone
    }
}

QueryAnalysis Retriever::analyze_query(const std::string& query, const std::string& hypothetical,
                                       const std::string& profile,
                                       const std::string& character) {
    CompletionRequest request;
    request.prompt = fill_template(analyze_template_, {{"question", query},
                                                       {"hypothetical", hypothetical},
                                                       {"profile", profile},
                                                       {"character", character}});
    request.temperature = config_.temperature;
    request.max_output_tokens = 1024;
    request.tag = "analyze";

    QueryAnalysis analysis;
    analysis.query = query;
    analysis.hypothetical_context = hypothetical;
    analysis.character = character;

    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string output;
        try {
            output = gateway_.complete(request);
        } catch (const TransportError&) {
            break;
        }
        std::size_t skipped = 0;
        analysis.mentions = parse_mentions(output, &skipped);
        trace_.unparseable_mentions += skipped;
        if (!analysis.mentions.empty() || trim(output).empty()) break;
        request.prompt += "\nOutput only records in the required format.";
    }
    return analysis;
}

RetrievedContext Retriever::retrieve(const QueryAnalysis& analysis) {
    RetrievedContext ctx;
    ctx.profile = graph_.character_profile(graph_.owner(), config_.profile_relations);

    std::vector<std::pair<double, std::string>> neighborhood;  // (strength, text)

    for (const auto& mention : analysis.mentions) {
        if (!mention.relevant) {
            // Strategy 1: no lookups, the rationale itself is the context.
            ctx.rejections.emplace_back(mention.name, mention.rationale);
            continue;
        }
        if (mention.specificity == Specificity::specific) {
            // Strategy 2: name-mapping exact match first, vector search second.
            std::vector<std::string> canonicals;
            if (const std::string* hit = mapping_.find_canonical_ci(mention.name)) {
                canonicals.push_back(*hit);
            } else {
                std::string embed_text = mention.name;
                if (!mention.rationale.empty()) embed_text += " " + mention.rationale;
                EmbeddingVector q = gateway_.embed(embed_text);
                ++trace_.vector_lookups;
                for (const auto& hit : index_.top_k(q, config_.retrieval_k)) {
                    if (hit.similarity < config_.similarity_floor) continue;
                    if (const std::string* canon = mapping_.find_canonical_ci(hit.key)) {
                        canonicals.push_back(*canon);
                    }
                }
            }
            for (const auto& canonical : canonicals) {
                if (!graph_.has_node(canonical)) continue;
                bool duplicate = false;
                for (const auto& fact : ctx.entity_facts) {
                    if (fact.key == canonical) duplicate = true;
                }
                if (duplicate) continue;
                ++trace_.graph_lookups;
                const GraphNode& node = graph_.node(canonical);
                EntityFact fact;
                fact.key = canonical;
                fact.node_text = node_line(node);
                if (auto edge = graph_.edge_between(canonical, graph_.owner())) {
                    fact.relation_texts.push_back(edge_line(**edge));
                    fact.strength = (*edge)->strength;
                }
                ctx.entity_facts.push_back(std::move(fact));
            }
        } else {
            // Strategy 3: typed 1-hop neighborhood of the character.
            std::set<std::string> filter{mention.entity_type};
            ++trace_.graph_lookups;
            auto neighbors = graph_.one_hop_neighbors(graph_.owner(), &filter);
            if (neighbors.size() < 2) {
                neighbors = graph_.one_hop_neighbors(graph_.owner(), nullptr);
            }
            for (const auto& fact : neighbors) {
                std::string text = node_line(*fact.node);
                bool duplicate = false;
                for (const auto& [s, t] : neighborhood) {
                    if (t == text) duplicate = true;
                }
                if (!duplicate) neighborhood.emplace_back(fact.edge->strength, text);
            }
        }
    }

    for (const auto& [strength, text] : neighborhood) ctx.neighborhood_facts.push_back(text);

    // Budget: drop the lowest-strength facts first, then rejections, then
    // trim the profile.
    auto rendered_tokens = [&]() { return count_tokens(render_context(ctx)); };
    std::vector<double> neighbor_strengths;
    for (const auto& [s, t] : neighborhood) neighbor_strengths.push_back(s);
    while (rendered_tokens() > config_.token_budget) {
        double min_entity = 1e300;
        std::size_t entity_at = ctx.entity_facts.size();
        for (std::size_t i = 0; i < ctx.entity_facts.size(); ++i) {
            if (ctx.entity_facts[i].strength < min_entity) {
                min_entity = ctx.entity_facts[i].strength;
                entity_at = i;
            }
        }
        double min_neighbor = 1e300;
        std::size_t neighbor_at = ctx.neighborhood_facts.size();
        for (std::size_t i = 0; i < ctx.neighborhood_facts.size(); ++i) {
            if (neighbor_strengths[i] < min_neighbor) {
                min_neighbor = neighbor_strengths[i];
                neighbor_at = i;
            }
        }
        if (neighbor_at < ctx.neighborhood_facts.size() &&
            (entity_at == ctx.entity_facts.size() || min_neighbor <= min_entity)) {
            ctx.neighborhood_facts.erase(ctx.neighborhood_facts.begin() +
                                         static_cast<std::ptrdiff_t>(neighbor_at));
            neighbor_strengths.erase(neighbor_strengths.begin() +
                                     static_cast<std::ptrdiff_t>(neighbor_at));
        } else if (entity_at < ctx.entity_facts.size()) {
            ctx.entity_facts.erase(ctx.entity_facts.begin() +
                                   static_cast<std::ptrdiff_t>(entity_at));
        } else if (!ctx.rejections.empty()) {
            ctx.rejections.pop_back();
        } else if (!ctx.profile.empty()) {
            std::size_t keep = count_tokens(ctx.profile) / 2;
            ctx.profile = truncate_tokens(ctx.profile, keep);
        } else {
            break;  // only section scaffolding remains
        }
    }
    ctx.token_budget_used = rendered_tokens();
    return ctx;
}

RetrievedContext Retriever::run(const std::string& query) {
    const std::string& character = graph_.owner();
    std::string hypothetical = hypothesize(query, character);
    std::string profile = graph_.character_profile(character, config_.profile_relations);
    QueryAnalysis analysis = analyze_query(query, hypothetical, profile, character);
    return retrieve(analysis);
}

std::string render_context(const RetrievedContext& context) {
    std::string out = "---- Character Profile-----\n" + context.profile + "\n";
    if (!context.rejections.empty()) {
        out += "\n---- Out-of-scope Entities-----\n";
        for (const auto& [name, rationale] : context.rejections) {
            out += name + ": " + rationale + "\n";
        }
    }
    if (!context.entity_facts.empty() || !context.neighborhood_facts.empty()) {
        out += "\n---- Entity Information-----\n";
        for (const auto& fact : context.entity_facts) out += fact.node_text + "\n";
        for (const auto& text : context.neighborhood_facts) out += text + "\n";
    }
    std::string relations;
    for (const auto& fact : context.entity_facts) {
        for (const auto& text : fact.relation_texts) relations += text + "\n";
    }
    if (!relations.empty()) {
        out += "\n---- Relation Information-----\n" + relations;
    }
    return out;
}

}  // namespace rolerag

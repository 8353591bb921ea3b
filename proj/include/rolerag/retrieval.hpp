#pragma once
// Boundary-aware retrieval: hypothetical-context inference, entity analysis
// with relevance and specificity, and the three context-assembly strategies.

#include <cstddef>
#include <string>
#include <vector>

#include "rolerag/gateway.hpp"
#include "rolerag/graph.hpp"
#include "rolerag/vector_index.hpp"

namespace rolerag {

enum class Specificity { specific, general };

struct EntityMention {
    std::string name;
    std::string entity_type;
    bool relevant = false;
    std::string rationale;
    Specificity specificity = Specificity::general;
};

struct QueryAnalysis {
    std::string query;
    std::string hypothetical_context;
    std::vector<EntityMention> mentions;
    std::string character;  // graph owner, canonical
};

struct EntityFact {
    std::string key;  // canonical node name
    std::string node_text;
    std::vector<std::string> relation_texts;
    double strength = 0.0;
};

struct RetrievedContext {
    std::vector<std::pair<std::string, std::string>> rejections;  // (name, rationale)
    std::vector<EntityFact> entity_facts;
    std::vector<std::string> neighborhood_facts;
    std::string profile;
    std::size_t token_budget_used = 0;
};

struct RetrieverConfig {
    std::size_t retrieval_k = 3;       // strategy-2 top-k'
    double similarity_floor = 0.4;
    std::size_t hypothesis_max_tokens = 200;
    std::size_t token_budget = 2000;
    std::size_t profile_relations = 10;
    double temperature = 0.0;
};

// Counts graph/vector lookups so routing soundness is observable in tests.
struct RetrievalTrace {
    std::size_t vector_lookups = 0;
    std::size_t graph_lookups = 0;
    std::size_t unparseable_mentions = 0;
};

class Retriever {
public:
    Retriever(Gateway& gateway, const KnowledgeGraph& graph, const VectorIndex& index,
              const NameMapping& mapping, std::string hypothesize_template,
              std::string analyze_template, RetrieverConfig config = {});

    // Degrades to "" on gateway failure; analysis then runs on the query alone.
    std::string hypothesize(const std::string& query, const std::string& character);

    QueryAnalysis analyze_query(const std::string& query, const std::string& hypothetical,
                                const std::string& profile, const std::string& character);

    RetrievedContext retrieve(const QueryAnalysis& analysis);

    // Full pipeline for one query: hypothesize, analyze, retrieve.
    RetrievedContext run(const std::string& query);

    const RetrievalTrace& trace() const { return trace_; }

private:
    Gateway& gateway_;
    const KnowledgeGraph& graph_;
    const VectorIndex& index_;
    const NameMapping& mapping_;
    std::string hypothesize_template_;
    std::string analyze_template_;
    RetrieverConfig config_;
    RetrievalTrace trace_;
};

// Parses analysis records `(type<|>name<|>rationale<|>Yes|No<|>specific|general)`.
std::vector<EntityMention> parse_mentions(const std::string& text, std::size_t* skipped);

// Sectioned plain-text block consumed by the generation prompt's
// {context_data} slot. Section order: profile, rejections, entity facts,
// neighborhood facts; truncated to the token budget dropping the
// lowest-strength facts first.
std::string render_context(const RetrievedContext& context);

}  // namespace rolerag

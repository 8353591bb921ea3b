#pragma once
// Deduplicated knowledge graph: name mapping applied to the stores, merged
// descriptions, undirected edges keyed by canonical name pairs.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rolerag/extraction.hpp"
#include "rolerag/gateway.hpp"
#include "rolerag/normalization.hpp"

namespace rolerag {

struct GraphNode {
    std::string canonical_name;
    std::string entity_type;
    std::string merged_description;
    std::set<std::string> source_names;
    std::size_t degree = 0;
};

struct GraphEdge {
    std::string source;  // canonical names, source < target
    std::string target;
    std::string merged_description;
    double strength = 0.0;  // max over merged records
};

struct NeighborFact {
    const GraphNode* node = nullptr;
    const GraphEdge* edge = nullptr;
};

class KnowledgeGraph {
public:
    const std::string& owner() const { return owner_; }
    std::size_t node_count() const { return node_order_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t dropped_self_loops() const { return dropped_self_loops_; }

    bool has_node(const std::string& canonical_name) const;
    const GraphNode& node(const std::string& canonical_name) const;
    const std::vector<std::string>& node_names() const { return node_order_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    std::optional<const GraphEdge*> edge_between(const std::string& a,
                                                 const std::string& b) const;

    // Adjacent nodes with their edges, descending edge strength then name,
    // optionally restricted to a set of entity types.
    std::vector<NeighborFact> one_hop_neighbors(
        const std::string& canonical_name,
        const std::set<std::string>* type_filter = nullptr) const;

    // Node description plus a digest of its top-m strongest relations.
    std::string character_profile(const std::string& character, std::size_t m = 10) const;

    void save_json(const std::string& path) const;
    static KnowledgeGraph load_json(const std::string& path);

    friend class GraphBuilder;

private:
    std::string owner_;
    std::vector<std::string> node_order_;
    std::map<std::string, GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::map<std::string, std::vector<std::size_t>> adjacency_;  // node -> edge ids
    std::size_t dropped_self_loops_ = 0;

    void index_edges();
};

struct GraphBuilderConfig {
    std::size_t merge_token_threshold = 400;  // below this, concatenate without an LLM call
    double temperature = 0.0;
};

class GraphBuilder {
public:
    GraphBuilder(Gateway& gateway, std::string summarize_template,
                 GraphBuilderConfig config = {});

    KnowledgeGraph build(const EntityStore& entities, const RelationStore& relations,
                         const NameMapping& mapping, const std::string& owner_raw_name);

    std::string merge_descriptions(const std::vector<std::string>& texts,
                                   const std::string& subject);

    std::size_t summarize_calls() const { return summarize_calls_; }
    std::size_t summarize_fallbacks() const { return summarize_fallbacks_; }

private:
    Gateway& gateway_;
    std::string summarize_template_;
    GraphBuilderConfig config_;
    std::size_t summarize_calls_ = 0;
    std::size_t summarize_fallbacks_ = 0;
};

}  // namespace rolerag

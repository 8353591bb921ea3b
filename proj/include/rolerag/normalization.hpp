#pragma once
// Entity normalization: kNN-pruned LLM equivalence judgments build an alias
// graph, connected components become alias groups, and one canonical name
// is elected per group.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rolerag/extraction.hpp"
#include "rolerag/gateway.hpp"
#include "rolerag/vector_index.hpp"

namespace rolerag {

struct AliasGraph {
    std::vector<std::string> nodes;  // insertion order
    std::set<std::pair<std::string, std::string>> edges;  // ordered pairs, a < b

    void add_node(const std::string& name);
    void add_edge(const std::string& a, const std::string& b);
    bool has_node(const std::string& name) const;

private:
    std::set<std::string> node_set_;
};

// Components partition the node set; order follows node insertion order.
std::vector<std::vector<std::string>> connected_components(const AliasGraph& graph);

struct NameMapping {
    std::map<std::string, std::string> canonical;       // raw -> canonical
    std::vector<std::vector<std::string>> components;   // name groups

    const std::string& canonical_of(const std::string& raw) const;
    bool contains(const std::string& raw) const;
    // Case-insensitive lookup; nullptr when no name matches.
    const std::string* find_canonical_ci(const std::string& raw) const;

    void save_json(const std::string& path) const;
    static NameMapping load_json(const std::string& path);
};

struct NormalizerConfig {
    std::size_t k = 5;
    double similarity_floor = 0.5;
    double temperature = 0.0;
};

struct NormalizationReport {
    std::size_t distinct_names = 0;
    std::size_t components = 0;
    std::size_t judge_calls = 0;
    std::size_t unparseable_verdicts = 0;
    std::size_t canonical_fallbacks = 0;
};

class Normalizer {
public:
    Normalizer(Gateway& gateway, std::string judge_template,
               std::string canonical_template, NormalizerConfig config = {});

    // Algorithm: iterate entities in store order; query the growing index
    // for k candidates before inserting; judge same-type candidates above
    // the similarity floor; components of the resulting graph become alias
    // groups. The index must start empty.
    NameMapping normalize(const EntityStore& store, VectorIndex& index);

    bool judge_same_entity(const EntityRecord& a, const EntityRecord& b);
    std::string elect_canonical_name(const std::vector<std::string>& component,
                                     const EntityStore& records);

    const NormalizationReport& report() const { return report_; }

private:
    Gateway& gateway_;
    std::string judge_template_;
    std::string canonical_template_;
    NormalizerConfig config_;
    NormalizationReport report_;
};

}  // namespace rolerag

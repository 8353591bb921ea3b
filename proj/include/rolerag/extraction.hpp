#pragma once
// Per-chunk LLM extraction of entities and relations in the delimited
// record format, aggregated into global stores.

#include <cstddef>
#include <string>
#include <vector>

#include "rolerag/gateway.hpp"
#include "rolerag/ingest.hpp"

namespace rolerag {

struct EntityRecord {
    std::string name;
    std::string entity_type;  // lowercase-normalized
    std::string description;
    std::string source_chunk;
};

struct RelationRecord {
    std::string source;
    std::string target;
    std::string description;
    double strength = 0.0;
    std::string source_chunk;
};

using EntityStore = std::vector<EntityRecord>;
using RelationStore = std::vector<RelationRecord>;

struct ParseOutcome {
    std::vector<EntityRecord> entities;
    std::vector<RelationRecord> relations;
    std::size_t malformed = 0;
    std::size_t coerced_strengths = 0;
    std::size_t dropped_self_loops = 0;
    std::size_t record_count = 0;  // non-empty record segments seen
};

// Grammar: records separated by "##", fields by "<|>", each record wrapped
// in parentheses. First field "relation" selects a 4-payload relation
// record, anything else is an entity type tag with 2 more payload fields.
// Total: malformed input is counted, never thrown.
ParseOutcome parse_records(const std::string& text, double default_strength = 5.0);

struct ExtractionReport {
    std::size_t chunks_total = 0;
    std::size_t chunks_failed = 0;
    std::size_t malformed_records = 0;
    std::size_t coerced_strengths = 0;
    std::size_t dropped_self_loops = 0;
};

struct ExtractorConfig {
    double temperature = 0.0;
    int max_output_tokens = 4096;
    int chunk_retries = 2;
    double max_failed_fraction = 0.25;
};

class Extractor {
public:
    Extractor(Gateway& gateway, std::string prompt_template, ExtractorConfig config = {});

    ParseOutcome extract_chunk(const Chunk& chunk);

    // Chunks may be extracted in parallel; aggregation is serialized in
    // chunk order so the stores are order-deterministic.
    std::pair<EntityStore, RelationStore> run(const std::vector<Chunk>& chunks);

    const ExtractionReport& report() const { return report_; }

private:
    Gateway& gateway_;
    std::string prompt_template_;
    ExtractorConfig config_;
    ExtractionReport report_;
};

void write_entities_jsonl(const EntityStore& store, const std::string& path);
void write_relations_jsonl(const RelationStore& store, const std::string& path);
EntityStore read_entities_jsonl(const std::string& path);
RelationStore read_relations_jsonl(const std::string& path);

}  // namespace rolerag

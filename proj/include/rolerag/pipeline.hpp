#pragma once
// End-to-end orchestration shared by the CLI and the test suites.

#include <memory>
#include <string>
#include <vector>

#include "rolerag/config.hpp"
#include "rolerag/evaluation.hpp"
#include "rolerag/gateway.hpp"
#include "rolerag/graph.hpp"
#include "rolerag/normalization.hpp"
#include "rolerag/vector_index.hpp"

namespace rolerag {

std::unique_ptr<Gateway> make_gateway(const Config& config);

struct IndexBuildReport {
    std::string character;
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t entities_raw = 0;
    std::size_t entities_deduped = 0;
    std::size_t relations_raw = 0;
    std::size_t edges = 0;
    std::size_t judge_calls = 0;
    std::size_t malformed_records = 0;
};

// Writes entities.jsonl, relations.jsonl, vectors.jsonl, mapping.json,
// graph.json and build_report.json into out_dir.
IndexBuildReport run_index(const std::string& corpus_dir, const std::string& out_dir,
                           const Config& config, Gateway& gateway,
                           const std::string& assets = "");

struct LoadedIndex {
    KnowledgeGraph graph;
    VectorIndex index;
    NameMapping mapping;
};

LoadedIndex load_index(const std::string& index_dir);

struct AskResult {
    std::string response;
    std::string rendered_context;
    std::string prompt;
};

enum class AskMode { vanilla, rolerag };

AskResult run_ask(const LoadedIndex* index, const std::string& character,
                  const std::string& question, AskMode mode, const Config& config,
                  Gateway& gateway, const std::string& assets = "");

struct EvalRunReport {
    EvalReport report;
    std::size_t questions = 0;
    std::size_t malformed = 0;
};

// Writes responses.jsonl, judgments.jsonl, report.json and report.txt.
EvalRunReport run_eval(const LoadedIndex* index, const std::string& questions_path,
                       const std::string& out_dir, const std::vector<Metric>& metrics,
                       AskMode mode, const Config& config, Gateway& gateway,
                       const std::string& assets = "",
                       const std::string& overrides_path = "");

}  // namespace rolerag

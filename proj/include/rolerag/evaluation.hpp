#pragma once
// LLM-as-judge metrics: Knowledge Exposure, Knowledge Hallucination,
// Unknown Question Rejection, with Analysis/Rating parsing, human score
// overrides, and dataset-level aggregation.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rolerag/gateway.hpp"

namespace rolerag {

enum class Metric { KE, KH, UQR };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& s);

bool rating_in_range(Metric metric, double rating);

struct Override {
    double rating = 0.0;
    std::string note;
};

struct JudgeResult {
    std::string item_id;
    std::string character;
    Metric metric = Metric::KE;
    std::string analysis;
    double rating = 0.0;
    bool scored = false;
    std::optional<Override> override;

    double effective_rating() const { return override ? override->rating : rating; }
};

// Parses "Analysis: <analysis>" followed by "Rating: <rating>"; the last
// Rating line wins and the analysis must precede it.
struct ParsedJudgment {
    std::string analysis;
    double rating = 0.0;
    bool ok = false;
};
ParsedJudgment parse_judgment(const std::string& text);

JudgeResult apply_override(JudgeResult result, double rating, const std::string& note);

struct Question {
    std::string id;
    std::string character;
    std::string question;
    bool out_of_scope = false;
};

struct MetricReport {
    double mean = 0.0;
    std::size_t scored = 0;
    std::size_t unscored = 0;
    bool available = false;
    std::map<std::string, double> per_character_mean;
};

struct EvalReport {
    std::map<std::string, MetricReport> metrics;  // "KE" | "KH" | "UQR"
    std::size_t in_scope = 0;
    std::size_t out_of_scope = 0;
};

struct JudgeConfig {
    double temperature = 0.2;
    bool uqr_out_of_scope_only = true;
};

class Judge {
public:
    Judge(Gateway& gateway, std::map<Metric, std::string> templates, JudgeConfig config = {});

    JudgeResult judge(Metric metric, const std::string& character,
                      const std::string& description, const std::string& question,
                      const std::string& response);

private:
    Gateway& gateway_;
    std::map<Metric, std::string> templates_;
    JudgeConfig config_;
};

// Means over effective ratings; UQR restricted to out-of-scope items when
// configured; unscored items excluded from means and reported separately.
EvalReport aggregate(const std::vector<JudgeResult>& results,
                     const std::vector<Question>& questions,
                     bool uqr_out_of_scope_only = true);

std::vector<Question> read_questions_jsonl(const std::string& path, std::size_t* malformed);
void write_results_jsonl(const std::vector<JudgeResult>& results, const std::string& path);
std::vector<JudgeResult> read_results_jsonl(const std::string& path);
struct OverrideEntry {
    std::string item_id;
    Metric metric = Metric::KE;
    Override value;
};
std::vector<OverrideEntry> read_overrides_jsonl(const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);
std::string format_report_table(const EvalReport& report);

}  // namespace rolerag

#include "rolerag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

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

}  // namespace

std::string to_string(Metric metric) {
    switch (metric) {
        case Metric::KE: return "KE";
        case Metric::KH: return "KH";
        default: return "UQR";
    }
}

Metric metric_from_string(const std::string& s) {
    if (s == "KE") return Metric::KE;
    if (s == "KH") return Metric::KH;
    if (s == "UQR") return Metric::UQR;
    throw InvalidInput("unknown metric: " + s);
}

bool rating_in_range(Metric metric, double rating) {
    if (!std::isfinite(rating)) return false;
    if (metric == Metric::UQR) return rating == 0.0 || rating == 1.0;
    return rating >= 1.0 && rating <= 10.0;
}

ParsedJudgment parse_judgment(const std::string& text) {
    ParsedJudgment parsed;
    std::size_t analysis_at = text.find("Analysis:");
    // Judges sometimes restate the format; the last Rating line wins.
    std::size_t rating_at = text.rfind("Rating:");
    if (analysis_at == std::string::npos || rating_at == std::string::npos) return parsed;
    if (rating_at < analysis_at) return parsed;  // analysis must precede the rating

    std::string analysis = text.substr(analysis_at + 9, rating_at - analysis_at - 9);
    std::string rating_text = trim(text.substr(rating_at + 7));
    std::size_t line_end = rating_text.find('\n');
    if (line_end != std::string::npos) rating_text = trim(rating_text.substr(0, line_end));
    try {
        std::size_t consumed = 0;
        parsed.rating = std::stod(rating_text, &consumed);
        // Trailing punctuation after the number is tolerated.
        (void)consumed;
    } catch (const std::exception&) {
        return parsed;
    }
    parsed.analysis = trim(analysis);
    parsed.ok = true;
    return parsed;
}

JudgeResult apply_override(JudgeResult result, double rating, const std::string& note) {
    if (!rating_in_range(result.metric, rating)) {
        throw InvalidInput("override rating " + std::to_string(rating) +
                           " out of range for metric " + to_string(result.metric));
    }
    result.override = Override{rating, note};
    return result;
}

Judge::Judge(Gateway& gateway, std::map<Metric, std::string> templates, JudgeConfig config)
    : gateway_(gateway), templates_(std::move(templates)), config_(config) {}

JudgeResult Judge::judge(Metric metric, const std::string& character,
                         const std::string& description, const std::string& question,
                         const std::string& response) {
    auto tpl = templates_.find(metric);
    if (tpl == templates_.end()) {
        throw ConfigError("no judge template for metric " + to_string(metric));
    }
    CompletionRequest request;
    request.prompt = fill_template(tpl->second, {{"character", character},
                                                 {"description", description},
                                                 {"question", question},
                                                 {"response", response}});
    request.temperature = config_.temperature;
    request.max_output_tokens = 1024;
    request.tag = "judge";

    JudgeResult result;
    result.character = character;
    result.metric = metric;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string output = gateway_.complete(request);
        ParsedJudgment parsed = parse_judgment(output);
        if (parsed.ok && rating_in_range(metric, parsed.rating)) {
            result.analysis = parsed.analysis;
            result.rating = parsed.rating;
            result.scored = true;
            return result;
        }
        request.prompt += "\nProvide exactly one Analysis line followed by one Rating line.";
    }
    return result;  // unscored, excluded from means
}

EvalReport aggregate(const std::vector<JudgeResult>& results,
                     const std::vector<Question>& questions, bool uqr_out_of_scope_only) {
    std::map<std::string, const Question*> by_id;
    for (const auto& q : questions) by_id[q.id] = &q;

    EvalReport report;
    for (const auto& q : questions) {
        if (q.out_of_scope) {
            ++report.out_of_scope;
        } else {
            ++report.in_scope;
        }
    }

    struct Acc {
        double sum = 0.0;
        std::size_t n = 0;
        std::size_t unscored = 0;
        std::map<std::string, std::pair<double, std::size_t>> per_character;
    };
    std::map<std::string, Acc> accs;

    for (const auto& result : results) {
        auto qit = by_id.find(result.item_id);
        if (qit == by_id.end()) {
            throw InvalidInput("judge result for unknown question id: " + result.item_id);
        }
        if (result.metric == Metric::UQR && uqr_out_of_scope_only &&
            !qit->second->out_of_scope) {
            continue;
        }
        Acc& acc = accs[to_string(result.metric)];
        if (!result.scored) {
            ++acc.unscored;
            continue;
        }
        const double rating = result.effective_rating();
        acc.sum += rating;
        ++acc.n;
        auto& [char_sum, char_n] = acc.per_character[result.character];
        char_sum += rating;
        ++char_n;
    }

    for (const auto& [name, acc] : accs) {
        MetricReport mr;
        mr.scored = acc.n;
        mr.unscored = acc.unscored;
        mr.available = acc.n > 0;
        if (mr.available) mr.mean = acc.sum / static_cast<double>(acc.n);
        for (const auto& [character, pair] : acc.per_character) {
            mr.per_character_mean[character] = pair.first / static_cast<double>(pair.second);
        }
        report.metrics[name] = std::move(mr);
    }
    return report;
}

std::vector<Question> read_questions_jsonl(const std::string& path, std::size_t* malformed) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open questions file: " + path);
    std::vector<Question> questions;
    std::size_t bad = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            Question q;
            q.id = j.value("id", path + "#" + std::to_string(line_no));
            q.character = j.at("character").get<std::string>();
            q.question = j.at("question").get<std::string>();
            q.out_of_scope = j.value("label", std::string("in_scope")) == "out_of_scope";
            questions.push_back(std::move(q));
        } catch (const nlohmann::json::exception&) {
            ++bad;
        }
    }
    if (malformed) *malformed = bad;
    return questions;
}

void write_results_jsonl(const std::vector<JudgeResult>& results, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    for (const auto& r : results) {
        nlohmann::ordered_json j = {{"item_id", r.item_id},
                                    {"character", r.character},
                                    {"metric", to_string(r.metric)},
                                    {"analysis", r.analysis},
                                    {"rating", r.rating},
                                    {"scored", r.scored}};
        if (r.override) {
            j["override"] = {{"rating", r.override->rating}, {"note", r.override->note}};
        }
        out << j.dump() << "\n";
    }
}

std::vector<JudgeResult> read_results_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path);
    std::vector<JudgeResult> results;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        JudgeResult r;
        r.item_id = j.at("item_id");
        r.character = j.at("character");
        r.metric = metric_from_string(j.at("metric"));
        r.analysis = j.at("analysis");
        r.rating = j.at("rating");
        r.scored = j.at("scored");
        if (j.contains("override")) {
            r.override = Override{j["override"].at("rating"), j["override"].at("note")};
        }
        results.push_back(std::move(r));
    }
    return results;
}

std::vector<OverrideEntry> read_overrides_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open overrides file: " + path);
    std::vector<OverrideEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        entries.push_back({j.at("item_id"), metric_from_string(j.at("metric")),
                           Override{j.at("rating"), j.value("note", std::string())}});
    }
    return entries;
}

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::ordered_json j;
    j["in_scope"] = report.in_scope;
    j["out_of_scope"] = report.out_of_scope;
    j["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [name, mr] : report.metrics) {
        nlohmann::ordered_json m = {{"available", mr.available},
                                    {"mean", mr.available ? mr.mean : 0.0},
                                    {"scored", mr.scored},
                                    {"unscored", mr.unscored}};
        m["per_character"] = nlohmann::ordered_json::object();
        for (const auto& [character, mean] : mr.per_character_mean) {
            m["per_character"][character] = mean;
        }
        j["metrics"][name] = std::move(m);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "metric" << std::right << std::setw(8) << "mean"
        << std::setw(9) << "scored" << std::setw(10) << "unscored" << "\n";
    for (const auto& [name, mr] : report.metrics) {
        out << std::left << std::setw(8) << name << std::right << std::setw(8);
        if (mr.available) {
            out << std::fixed << std::setprecision(3) << mr.mean;
        } else {
            out << "n/a";
        }
        out << std::setw(9) << mr.scored << std::setw(10) << mr.unscored << "\n";
        out.unsetf(std::ios::fixed);
    }
    out << "questions: " << report.in_scope << " in scope, " << report.out_of_scope
        << " out of scope\n";
    return out.str();
}

}  // namespace rolerag

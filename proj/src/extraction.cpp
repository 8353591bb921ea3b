#include "rolerag/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

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

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = s.find(sep, pos);
        if (next == std::string::npos) {
            parts.push_back(s.substr(pos));
            return parts;
        }
        parts.push_back(s.substr(pos, next - pos));
        pos = next + sep.size();
    }
}

}  // namespace

ParseOutcome parse_records(const std::string& text, double default_strength) {
    ParseOutcome out;
    // "##" is the record delimiter; newlines between records are tolerated.
    std::string normalized = text;
    std::size_t pos = 0;
    while ((pos = normalized.find("##", pos)) != std::string::npos) {
        normalized.replace(pos, 2, "\n");
    }
    for (const std::string& raw_segment : split(normalized, "\n")) {
        std::string record = trim(raw_segment);
        if (record.empty()) continue;
        ++out.record_count;

        if (record.front() == '(' && record.back() == ')') {
            record = record.substr(1, record.size() - 2);
        }
        std::vector<std::string> fields = split(record, "<|>");
        for (auto& f : fields) f = trim(f);

        if (fields.size() >= 2 && lower(fields[0]) == "relation") {
            if (fields.size() != 5 || fields[1].empty() || fields[2].empty()) {
                ++out.malformed;
                continue;
            }
            if (lower(fields[1]) == lower(fields[2])) {
                ++out.dropped_self_loops;
                continue;
            }
            RelationRecord r;
            r.source = fields[1];
            r.target = fields[2];
            r.description = fields[3];
            try {
                std::size_t consumed = 0;
                r.strength = std::stod(fields[4], &consumed);
                if (consumed != fields[4].size() || !std::isfinite(r.strength)) {
                    throw std::invalid_argument("trailing junk");
                }
            } catch (const std::exception&) {
                r.strength = default_strength;
                ++out.coerced_strengths;
            }
            out.relations.push_back(std::move(r));
        } else if (fields.size() == 3 && !fields[1].empty() && !fields[2].empty()) {
            EntityRecord e;
            e.entity_type = lower(fields[0]);
            e.name = fields[1];
            e.description = fields[2];
            out.entities.push_back(std::move(e));
        } else {
            ++out.malformed;
        }
    }
    return out;
}

Extractor::Extractor(Gateway& gateway, std::string prompt_template, ExtractorConfig config)
    : gateway_(gateway), prompt_template_(std::move(prompt_template)), config_(config) {}

ParseOutcome Extractor::extract_chunk(const Chunk& chunk) {
    CompletionRequest request;
    request.prompt = fill_template(prompt_template_, {{"input_text", chunk.text}});
    request.temperature = config_.temperature;
    request.max_output_tokens = config_.max_output_tokens;
    request.tag = "extraction";

    std::string response = gateway_.complete(request);
    ParseOutcome out = parse_records(response);
    for (auto& e : out.entities) e.source_chunk = chunk.id;
    for (auto& r : out.relations) r.source_chunk = chunk.id;
    return out;
}

std::pair<EntityStore, RelationStore> Extractor::run(const std::vector<Chunk>& chunks) {
    report_ = {};
    report_.chunks_total = chunks.size();

    std::vector<ParseOutcome> results(chunks.size());
    std::vector<char> failed(chunks.size(), 0);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(chunks.size()); ++i) {
        for (int attempt = 0;; ++attempt) {
            try {
                results[i] = extract_chunk(chunks[i]);
                break;
            } catch (const TransportError&) {
                if (attempt >= config_.chunk_retries) {
                    failed[i] = 1;
                    break;
                }
            }
        }
    }

    EntityStore entities;
    RelationStore relations;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (failed[i]) {
            ++report_.chunks_failed;
            continue;
        }
        const ParseOutcome& out = results[i];
        report_.malformed_records += out.malformed;
        report_.coerced_strengths += out.coerced_strengths;
        report_.dropped_self_loops += out.dropped_self_loops;
        entities.insert(entities.end(), out.entities.begin(), out.entities.end());
        relations.insert(relations.end(), out.relations.begin(), out.relations.end());
    }

    if (!chunks.empty() &&
        static_cast<double>(report_.chunks_failed) >
            config_.max_failed_fraction * static_cast<double>(chunks.size())) {
        throw TransportError("extraction aborted: " + std::to_string(report_.chunks_failed) +
                                 " of " + std::to_string(chunks.size()) + " chunks failed",
                             config_.chunk_retries + 1);
    }
    return {std::move(entities), std::move(relations)};
}

void write_entities_jsonl(const EntityStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    for (const auto& e : store) {
        nlohmann::ordered_json j = {{"name", e.name},
                                    {"entity_type", e.entity_type},
                                    {"description", e.description},
                                    {"source_chunk", e.source_chunk}};
        out << j.dump() << "\n";
    }
}

void write_relations_jsonl(const RelationStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    for (const auto& r : store) {
        nlohmann::ordered_json j = {{"source", r.source},
                                    {"target", r.target},
                                    {"description", r.description},
                                    {"strength", r.strength},
                                    {"source_chunk", r.source_chunk}};
        out << j.dump() << "\n";
    }
}

EntityStore read_entities_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path);
    EntityStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        store.push_back({j.at("name"), j.at("entity_type"), j.at("description"),
                         j.at("source_chunk")});
    }
    return store;
}

RelationStore read_relations_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path);
    RelationStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        store.push_back({j.at("source"), j.at("target"), j.at("description"),
                         j.at("strength"), j.at("source_chunk")});
    }
    return store;
}

}  // namespace rolerag

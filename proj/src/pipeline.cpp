#include "rolerag/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rolerag/extraction.hpp"
#include "rolerag/generation.hpp"
#include "rolerag/ingest.hpp"
#include "rolerag/prompts.hpp"
#include "rolerag/retrieval.hpp"

namespace fs = std::filesystem;

namespace rolerag {
namespace {

RetrieverConfig retriever_config(const Config& config) {
    RetrieverConfig rc;
    rc.retrieval_k = config.retrieval_k;
    rc.similarity_floor = config.retrieval_similarity_floor;
    rc.token_budget = config.token_budget;
    rc.profile_relations = config.profile_relations;
    rc.temperature = config.pipeline_temperature;
    return rc;
}

std::string generation_template_name(const Config& config) {
    return config.prompt_language == "zh" ? "generate_zh" : "generate_en";
}

}  // namespace

std::unique_ptr<Gateway> make_gateway(const Config& config) {
    if (!config.mock_rules_path.empty()) {
        return MockGateway::from_rules_file(config.mock_rules_path, config.embedding_dim);
    }
    HttpGatewayConfig http;
    http.base_url = config.chat_endpoint;
    http.chat_model = config.chat_model;
    http.embed_model = config.embed_model;
    http.api_key_env = config.api_key_env;
    http.embedding_dim = config.embedding_dim;
    return std::make_unique<HttpGateway>(http);
}

IndexBuildReport run_index(const std::string& corpus_dir, const std::string& out_dir,
                           const Config& config, Gateway& gateway, const std::string& assets) {
    config.validate();
    Corpus corpus = load_corpus(corpus_dir);
    fs::create_directories(out_dir);

    std::vector<Chunk> chunks;
    for (const auto& doc : corpus.documents) {
        auto doc_chunks = chunk_document(doc, config.chunk_size, config.overlap);
        chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
    }

    auto with_character = [&](const std::string& name) {
        return fill_template(load_prompt(name, assets), {{"character", corpus.character}});
    };

    ExtractorConfig xc;
    xc.temperature = config.pipeline_temperature;
    Extractor extractor(gateway, with_character("extraction"), xc);
    auto [entities, relations] = extractor.run(chunks);
    write_entities_jsonl(entities, (fs::path(out_dir) / "entities.jsonl").string());
    write_relations_jsonl(relations, (fs::path(out_dir) / "relations.jsonl").string());

    NormalizerConfig nc;
    nc.k = config.normalization_k;
    nc.similarity_floor = config.normalization_similarity_floor;
    nc.temperature = config.pipeline_temperature;
    Normalizer normalizer(gateway, with_character("normalization_judge"),
                          with_character("canonical_name"), nc);
    VectorIndex index(gateway.embedding_dim());
    NameMapping mapping = normalizer.normalize(entities, index);
    mapping.save_json((fs::path(out_dir) / "mapping.json").string());
    index.save_jsonl((fs::path(out_dir) / "vectors.jsonl").string());

    GraphBuilderConfig gc;
    gc.merge_token_threshold = config.merge_token_threshold;
    gc.temperature = config.pipeline_temperature;
    GraphBuilder builder(gateway, with_character("summarize"), gc);
    KnowledgeGraph graph = builder.build(entities, relations, mapping, corpus.character);
    graph.save_json((fs::path(out_dir) / "graph.json").string());

    IndexBuildReport report;
    report.character = corpus.character;
    report.documents = corpus.documents.size();
    report.chunks = chunks.size();
    report.entities_raw = entities.size();
    report.entities_deduped = graph.node_count();
    report.relations_raw = relations.size();
    report.edges = graph.edge_count();
    report.judge_calls = normalizer.report().judge_calls;
    report.malformed_records = extractor.report().malformed_records;

    nlohmann::ordered_json j = {{"character", report.character},
                                {"documents", report.documents},
                                {"chunks", report.chunks},
                                {"entities_raw", report.entities_raw},
                                {"entities_deduped", report.entities_deduped},
                                {"relations_raw", report.relations_raw},
                                {"edges", report.edges},
                                {"judge_calls", report.judge_calls},
                                {"malformed_records", report.malformed_records}};
    std::ofstream out(fs::path(out_dir) / "build_report.json", std::ios::binary);
    out << j.dump(2) << "\n";
    return report;
}

LoadedIndex load_index(const std::string& index_dir) {
    fs::path dir(index_dir);
    return LoadedIndex{KnowledgeGraph::load_json((dir / "graph.json").string()),
                       VectorIndex::load_jsonl((dir / "vectors.jsonl").string()),
                       NameMapping::load_json((dir / "mapping.json").string())};
}

AskResult run_ask(const LoadedIndex* index, const std::string& character,
                  const std::string& question, AskMode mode, const Config& config,
                  Gateway& gateway, const std::string& assets) {
    AskResult result;
    RetrievedContext context;

    if (mode == AskMode::rolerag) {
        if (!index) throw ConfigError("rolerag mode requires a built index");
        const std::string* owner = index->mapping.find_canonical_ci(character);
        if (!owner || *owner != index->graph.owner()) {
            throw NotFound("character not indexed: " + character);
        }
        Retriever retriever(gateway, index->graph, index->index, index->mapping,
                            load_prompt("hypothesize", assets), load_prompt("analyze", assets),
                            retriever_config(config));
        context = retriever.run(question);
        result.rendered_context = render_context(context);
    }

    RolePrompt prompt =
        build_role_prompt(load_prompt(generation_template_name(config), assets), character,
                          "", context, question);
    result.prompt = prompt.text;

    CompletionRequest request;
    request.prompt = prompt.text;
    request.temperature = config.generation_temperature;
    request.max_output_tokens = 1024;
    request.tag = "generate";
    std::string raw = gateway.complete(request);
    if (raw.empty()) raw = "(no response)";
    result.response = parse_role_response(raw, character).text;
    return result;
}

EvalRunReport run_eval(const LoadedIndex* index, const std::string& questions_path,
                       const std::string& out_dir, const std::vector<Metric>& metrics,
                       AskMode mode, const Config& config, Gateway& gateway,
                       const std::string& assets, const std::string& overrides_path) {
    fs::create_directories(out_dir);
    EvalRunReport run;
    std::vector<Question> questions = read_questions_jsonl(questions_path, &run.malformed);
    run.questions = questions.size();
    if (run.questions + run.malformed == 0) throw InvalidInput("questions file is empty");
    if (run.malformed * 10 > (run.questions + run.malformed)) {
        throw InvalidInput("more than 10% malformed question lines in " + questions_path);
    }

    std::map<Metric, std::string> templates = {
        {Metric::KE, load_prompt("judge_ke", assets)},
        {Metric::KH, load_prompt("judge_kh", assets)},
        {Metric::UQR, load_prompt("judge_uqr", assets)},
    };
    JudgeConfig jc;
    jc.temperature = config.judge_temperature;
    Judge judge(gateway, templates, jc);

    std::ofstream responses_out(fs::path(out_dir) / "responses.jsonl", std::ios::binary);
    std::vector<JudgeResult> results;

    for (const auto& q : questions) {
        AskMode question_mode = mode;
        if (question_mode == AskMode::rolerag) {
            const std::string* owner =
                index ? index->mapping.find_canonical_ci(q.character) : nullptr;
            if (!owner || !index || *owner != index->graph.owner()) {
                question_mode = AskMode::vanilla;  // character not covered by this index
            }
        }
        AskResult answer = run_ask(index, q.character, q.question, question_mode, config,
                                   gateway, assets);
        nlohmann::ordered_json jr = {{"id", q.id},
                                     {"character", q.character},
                                     {"question", q.question},
                                     {"response", answer.response},
                                     {"mode", question_mode == AskMode::rolerag ? "rolerag"
                                                                                : "vanilla"}};
        responses_out << jr.dump() << "\n";

        std::string description = q.character;
        if (index && question_mode == AskMode::rolerag) {
            description = index->graph.node(index->graph.owner()).merged_description;
        }
        for (Metric metric : metrics) {
            if (metric == Metric::UQR && jc.uqr_out_of_scope_only && !q.out_of_scope) continue;
            JudgeResult result =
                judge.judge(metric, q.character, description, q.question, answer.response);
            result.item_id = q.id;
            results.push_back(std::move(result));
        }
    }

    if (!overrides_path.empty()) {
        for (const auto& entry : read_overrides_jsonl(overrides_path)) {
            for (auto& result : results) {
                if (result.item_id == entry.item_id && result.metric == entry.metric) {
                    result = apply_override(result, entry.value.rating, entry.value.note);
                }
            }
        }
    }

    write_results_jsonl(results, (fs::path(out_dir) / "judgments.jsonl").string());
    run.report = aggregate(results, questions, jc.uqr_out_of_scope_only);
    write_report_json(run.report, (fs::path(out_dir) / "report.json").string());
    std::ofstream table(fs::path(out_dir) / "report.txt", std::ios::binary);
    table << format_report_table(run.report);
    return run;
}

}  // namespace rolerag

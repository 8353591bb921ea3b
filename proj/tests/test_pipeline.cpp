#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rolerag/pipeline.hpp"
#include "test_support.hpp"

using namespace rolerag;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& leaf) {
    fs::path dir = fs::temp_directory_path() / "rolerag_pipeline" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
    fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Config mock_config() {
    Config config;
    config.mock_rules_path = testsupport::fixture("mock/beethoven_rules.json");
    config.embedding_dim = 16;
    return config;
}

}  // namespace

TEST_CASE("config files load with comments, quotes, and overrides") {
    std::string dir = tmp_dir("config");
    std::string path = write_file(dir, "rolerag.conf",
                                  "# comment line\n"
                                  "chunk_size = 300\n"
                                  "overlap = 50\n"
                                  "chat_model = \"some-model\"\n"
                                  "prompt_language = zh\n"
                                  "\n"
                                  "judge_temperature = 0.4\n");
    Config config = load_config(path);
    CHECK(config.chunk_size == 300);
    CHECK(config.overlap == 50);
    CHECK(config.chat_model == "some-model");
    CHECK(config.prompt_language == "zh");
    CHECK(config.judge_temperature == doctest::Approx(0.4));
    // Untouched keys keep their defaults.
    CHECK(config.normalization_k == 5);
    CHECK(config.retrieval_k == 3);
    CHECK(config.token_budget == 2000);
}

TEST_CASE("unknown config keys and invalid combinations are rejected") {
    std::string dir = tmp_dir("config_bad");
    CHECK_THROWS_AS(load_config(write_file(dir, "a.conf", "no_such_key = 1\n")), ConfigError);
    CHECK_THROWS_AS(load_config(write_file(dir, "b.conf", "chunk_size = 100\noverlap = 100\n")),
                    ConfigError);
    CHECK_THROWS_AS(load_config(write_file(dir, "c.conf", "chunk_size = abc\n")), ConfigError);
    CHECK_THROWS_AS(load_config(write_file(dir, "d.conf", "just a line\n")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/rolerag.conf"), ConfigError);
}

TEST_CASE("a mock rules path selects the scripted gateway") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    REQUIRE(gateway);
    CHECK(gateway->embedding_dim() == 16);
    CompletionRequest req{"text with Born in Bonn inside", 0.0, 256, "extraction"};
    CHECK(gateway->complete(req).find("BEETHOVEN") != std::string::npos);
}

TEST_CASE("index build produces the expected graph and artifacts") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string out = tmp_dir("index_build");
    IndexBuildReport report =
        run_index(testsupport::fixture("beethoven_corpus"), out, config, *gateway);

    CHECK(report.character == "Beethoven");
    CHECK(report.documents == 1);
    CHECK(report.chunks == 1);
    CHECK(report.entities_raw == 5);
    CHECK(report.entities_deduped == 4);  // the two Beethoven names merge
    CHECK(report.relations_raw == 3);
    CHECK(report.edges == 3);
    CHECK(report.malformed_records == 0);
    for (const char* name : {"entities.jsonl", "relations.jsonl", "vectors.jsonl",
                             "mapping.json", "graph.json", "build_report.json"}) {
        CHECK(fs::exists(fs::path(out) / name));
    }

    LoadedIndex loaded = load_index(out);
    CHECK(loaded.graph.owner() == "BEETHOVEN");
    CHECK(loaded.graph.node_count() == 4);
    CHECK(loaded.mapping.canonical_of("LUDWIG VAN BEETHOVEN") == "BEETHOVEN");
    CHECK(loaded.index.size() == 5);  // raw surface names, including the alias
    auto edge = loaded.graph.edge_between("BEETHOVEN", "JOSEPH HAYDN");
    REQUIRE(edge.has_value());
    CHECK((*edge)->strength == doctest::Approx(9.0));
}

TEST_CASE("rebuilding the index is byte-identical") {
    Config config = mock_config();
    std::string out_a = tmp_dir("det_a");
    std::string out_b = tmp_dir("det_b");
    {
        auto gateway = make_gateway(config);
        run_index(testsupport::fixture("beethoven_corpus"), out_a, config, *gateway);
    }
    {
        auto gateway = make_gateway(config);
        run_index(testsupport::fixture("beethoven_corpus"), out_b, config, *gateway);
    }
    for (const char* name : {"entities.jsonl", "relations.jsonl", "vectors.jsonl",
                             "mapping.json", "graph.json", "build_report.json"}) {
        CHECK(slurp(fs::path(out_a) / name) == slurp(fs::path(out_b) / name));
    }
}

TEST_CASE("rolerag ask retrieves context and strips the role prefix") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string out = tmp_dir("ask");
    run_index(testsupport::fixture("beethoven_corpus"), out, config, *gateway);
    LoadedIndex index = load_index(out);

    AskResult result =
        run_ask(&index, "Beethoven", "What was the nature of your relationship with Haydn and Mozart?",
                AskMode::rolerag, config, *gateway);
    CHECK(result.response.find("Joseph Haydn was my teacher") == 0);
    CHECK(result.response.find("Beethoven:") == std::string::npos);
    CHECK(result.rendered_context.find("---- Entity Information-----") != std::string::npos);
    CHECK(result.rendered_context.find("---- Relation Information-----") != std::string::npos);
    CHECK(result.rendered_context.find("studied under the guidance of Joseph Haydn") !=
          std::string::npos);
    CHECK(result.rendered_context.find("MOZART") != std::string::npos);
    CHECK(result.prompt.find(result.rendered_context) != std::string::npos);
}

TEST_CASE("vanilla ask works without any index") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    AskResult result = run_ask(nullptr, "Beethoven", "Any question at all?", AskMode::vanilla,
                               config, *gateway);
    CHECK(result.response.find("Music is the one incorporeal entrance") == 0);
    CHECK(result.rendered_context.empty());
    CHECK(result.prompt.find("---- Character Profile-----") == std::string::npos);
    CHECK(result.prompt.find("---- Entity Information-----") == std::string::npos);
    CHECK(gateway->snapshot_stats().calls_by_tag["hypothesize"] == 0);
    CHECK(gateway->snapshot_stats().calls_by_tag["analyze"] == 0);
}

TEST_CASE("rolerag ask for an unindexed character fails cleanly") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string out = tmp_dir("ask_missing");
    run_index(testsupport::fixture("beethoven_corpus"), out, config, *gateway);
    LoadedIndex index = load_index(out);
    CHECK_THROWS_AS(run_ask(&index, "Sherlock Holmes", "Q?", AskMode::rolerag, config, *gateway),
                    NotFound);
    CHECK_THROWS_AS(run_ask(nullptr, "Beethoven", "Q?", AskMode::rolerag, config, *gateway),
                    ConfigError);
}

TEST_CASE("out-of-scope questions produce rejections, not lookups") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string out = tmp_dir("ask_oos");
    run_index(testsupport::fixture("beethoven_corpus"), out, config, *gateway);
    LoadedIndex index = load_index(out);
    std::uint64_t embeds_before = gateway->snapshot_stats().embed_calls;

    AskResult result = run_ask(&index, "Beethoven",
                               "What do you think of the Apollo 11 moon landing?",
                               AskMode::rolerag, config, *gateway);
    CHECK(result.rendered_context.find("---- Out-of-scope Entities-----") != std::string::npos);
    CHECK(result.rendered_context.find("Apollo 11") != std::string::npos);
    CHECK(result.response.find("I must decline") == 0);
    CHECK(gateway->snapshot_stats().embed_calls == embeds_before);  // no vector lookups
}

TEST_CASE("eval runs all metrics and writes reports") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string index_dir = tmp_dir("eval_index");
    run_index(testsupport::fixture("beethoven_corpus"), index_dir, config, *gateway);
    LoadedIndex index = load_index(index_dir);

    std::string out = tmp_dir("eval_out");
    EvalRunReport run =
        run_eval(&index, testsupport::fixture("questions/beethoven_eval.jsonl"), out,
                 {Metric::KE, Metric::KH, Metric::UQR}, AskMode::rolerag, config, *gateway);

    CHECK(run.questions == 3);
    CHECK(run.malformed == 0);
    CHECK(run.report.in_scope == 2);
    CHECK(run.report.out_of_scope == 1);
    REQUIRE(run.report.metrics.count("KE") == 1);
    CHECK(run.report.metrics["KE"].mean == doctest::Approx(9.0));
    CHECK(run.report.metrics["KE"].scored == 3);
    CHECK(run.report.metrics["KH"].mean == doctest::Approx(2.0));
    // UQR is judged only on the out-of-scope question.
    CHECK(run.report.metrics["UQR"].scored == 1);
    CHECK(run.report.metrics["UQR"].mean == doctest::Approx(1.0));

    for (const char* name : {"responses.jsonl", "judgments.jsonl", "report.json", "report.txt"}) {
        CHECK(fs::exists(fs::path(out) / name));
    }
    std::string table = slurp(fs::path(out) / "report.txt");
    CHECK(table.find("9.000") != std::string::npos);
    CHECK(table.find("2 in scope, 1 out of scope") != std::string::npos);
}

TEST_CASE("eval applies human overrides from the sidecar file") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string index_dir = tmp_dir("eval_ovr_index");
    run_index(testsupport::fixture("beethoven_corpus"), index_dir, config, *gateway);
    LoadedIndex index = load_index(index_dir);

    std::string out = tmp_dir("eval_ovr_out");
    std::string overrides = write_file(
        out, "overrides.jsonl",
        R"({"item_id": "q1", "metric": "KE", "rating": 3.0, "note": "manual demotion"})"
        "\n");
    EvalRunReport run =
        run_eval(&index, testsupport::fixture("questions/beethoven_eval.jsonl"), out,
                 {Metric::KE}, AskMode::rolerag, config, *gateway, "", overrides);
    // Means shift from (9+9+9)/3 to (3+9+9)/3.
    CHECK(run.report.metrics["KE"].mean == doctest::Approx(7.0));
    auto judgments = read_results_jsonl((fs::path(out) / "judgments.jsonl").string());
    bool found = false;
    for (const auto& j : judgments) {
        if (j.item_id == "q1" && j.metric == Metric::KE) {
            found = true;
            REQUIRE(j.override.has_value());
            CHECK(j.override->note == "manual demotion");
            CHECK(j.rating == doctest::Approx(9.0));  // original preserved
        }
    }
    CHECK(found);
}

TEST_CASE("eval falls back to vanilla for characters outside the index") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string index_dir = tmp_dir("eval_fb_index");
    run_index(testsupport::fixture("beethoven_corpus"), index_dir, config, *gateway);
    LoadedIndex index = load_index(index_dir);

    std::string out = tmp_dir("eval_fb_out");
    write_file(out, "questions.jsonl",
               R"({"id": "x1", "character": "Sherlock Holmes", "question": "Who is Watson?", "label": "in_scope"})"
               "\n");
    EvalRunReport run = run_eval(&index, (fs::path(out) / "questions.jsonl").string(), out,
                                 {Metric::KE}, AskMode::rolerag, config, *gateway);
    CHECK(run.questions == 1);
    std::string responses = slurp(fs::path(out) / "responses.jsonl");
    CHECK(responses.find("\"mode\":\"vanilla\"") != std::string::npos);
}

TEST_CASE("an eval with too many malformed question lines aborts") {
    Config config = mock_config();
    auto gateway = make_gateway(config);
    std::string out = tmp_dir("eval_malformed");
    write_file(out, "questions.jsonl",
               R"({"id": "a", "character": "B", "question": "ok", "label": "in_scope"})"
               "\nnot json\nstill not json\n");
    CHECK_THROWS_AS(run_eval(nullptr, (fs::path(out) / "questions.jsonl").string(), out,
                             {Metric::KE}, AskMode::vanilla, config, *gateway),
                    InvalidInput);
}

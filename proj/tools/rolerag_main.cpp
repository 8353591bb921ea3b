// rolerag: build a character knowledge-graph index, answer questions with
// boundary-aware retrieval, and run batch judge evaluations.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rolerag/pipeline.hpp"
#include "rolerag/retrieval.hpp"

using namespace rolerag;

namespace {

Config resolve_config(const std::string& config_path, const std::string& mock_rules) {
    Config config;
    if (!config_path.empty()) config = load_config(config_path);
    if (!mock_rules.empty()) config.mock_rules_path = mock_rules;
    config.validate();
    return config;
}

std::vector<Metric> parse_metrics(const std::string& csv) {
    std::vector<Metric> metrics;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) metrics.push_back(metric_from_string(item));
    }
    if (metrics.empty()) throw InvalidInput("no metrics selected");
    return metrics;
}

int cmd_inspect(const std::string& index_dir, const std::string& name) {
    LoadedIndex index = load_index(index_dir);
    const std::string* canonical = index.mapping.find_canonical_ci(name);
    if (!canonical) {
        std::cerr << "name not found in mapping: " << name << "\n";
        return 1;
    }
    std::cout << "canonical: " << *canonical << "\n";
    for (const auto& component : index.mapping.components) {
        if (std::find(component.begin(), component.end(), *canonical) == component.end() &&
            std::find(component.begin(), component.end(), name) == component.end()) {
            continue;
        }
        std::cout << "aliases:";
        for (const auto& alias : component) std::cout << " " << alias;
        std::cout << "\n";
    }
    if (index.graph.has_node(*canonical)) {
        const GraphNode& node = index.graph.node(*canonical);
        std::cout << "type: " << node.entity_type << "\ndegree: " << node.degree
                  << "\ndescription: " << node.merged_description << "\n";
        for (const auto& fact : index.graph.one_hop_neighbors(*canonical)) {
            std::cout << "edge -> " << fact.node->canonical_name << " (strength "
                      << fact.edge->strength << "): " << fact.edge->merged_description << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Character knowledge-graph RAG engine"};
    app.require_subcommand(1);

    std::string config_path, mock_rules, assets;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--mock", mock_rules, "scripted mock gateway rules file");
    app.add_option("--assets", assets, "prompt asset directory");

    auto* index_cmd = app.add_subcommand("index", "build an index from a character corpus");
    std::string corpus_dir, out_dir;
    index_cmd->add_option("corpus_dir", corpus_dir)->required();
    index_cmd->add_option("out_dir", out_dir)->required();

    auto* ask_cmd = app.add_subcommand("ask", "answer one question in character");
    std::string ask_index_dir, character, question, mode = "rolerag";
    bool show_context = false;
    ask_cmd->add_option("index_dir", ask_index_dir)->required();
    ask_cmd->add_option("character", character)->required();
    ask_cmd->add_option("question", question)->required();
    ask_cmd->add_option("--mode", mode)->check(CLI::IsMember({"vanilla", "rolerag"}));
    ask_cmd->add_flag("--show-context", show_context, "print the retrieved context");

    auto* eval_cmd = app.add_subcommand("eval", "batch-evaluate a question file");
    std::string eval_index_dir, questions_file, eval_out_dir, metrics_csv = "KE,KH,UQR";
    std::string eval_mode = "rolerag", overrides;
    eval_cmd->add_option("index_dir", eval_index_dir)->required();
    eval_cmd->add_option("questions_file", questions_file)->required();
    eval_cmd->add_option("out_dir", eval_out_dir)->required();
    eval_cmd->add_option("--metrics", metrics_csv, "comma-separated subset of KE,KH,UQR");
    eval_cmd->add_option("--mode", eval_mode)->check(CLI::IsMember({"vanilla", "rolerag"}));
    eval_cmd->add_option("--overrides", overrides, "human score override sidecar (JSONL)");

    auto* inspect_cmd = app.add_subcommand("inspect", "dump node/edge/mapping for a name");
    std::string inspect_index_dir, inspect_name;
    inspect_cmd->add_option("index_dir", inspect_index_dir)->required();
    inspect_cmd->add_option("name", inspect_name)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Config config = resolve_config(config_path, mock_rules);

        if (index_cmd->parsed()) {
            auto gateway = make_gateway(config);
            IndexBuildReport report = run_index(corpus_dir, out_dir, config, *gateway, assets);
            std::cout << "indexed " << report.character << ": " << report.entities_raw
                      << " raw entities -> " << report.entities_deduped << " nodes, "
                      << report.edges << " edges, " << report.judge_calls
                      << " equivalence-judge calls\n";
        } else if (ask_cmd->parsed()) {
            auto gateway = make_gateway(config);
            AskMode ask_mode = mode == "vanilla" ? AskMode::vanilla : AskMode::rolerag;
            std::unique_ptr<LoadedIndex> index;
            if (ask_mode == AskMode::rolerag) {
                index = std::make_unique<LoadedIndex>(load_index(ask_index_dir));
            }
            AskResult result =
                run_ask(index.get(), character, question, ask_mode, config, *gateway, assets);
            if (show_context) {
                std::cout << result.rendered_context << "\n---- Response-----\n";
            }
            std::cout << result.response << "\n";
        } else if (eval_cmd->parsed()) {
            auto gateway = make_gateway(config);
            AskMode run_mode = eval_mode == "vanilla" ? AskMode::vanilla : AskMode::rolerag;
            std::unique_ptr<LoadedIndex> index;
            if (run_mode == AskMode::rolerag) {
                index = std::make_unique<LoadedIndex>(load_index(eval_index_dir));
            }
            EvalRunReport run =
                run_eval(index.get(), questions_file, eval_out_dir, parse_metrics(metrics_csv),
                         run_mode, config, *gateway, assets, overrides);
            std::cout << format_report_table(run.report);
            if (run.malformed > 0) {
                std::cerr << run.malformed << " malformed question lines skipped\n";
            }
        } else if (inspect_cmd->parsed()) {
            return cmd_inspect(inspect_index_dir, inspect_name);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

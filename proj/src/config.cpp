#include "rolerag/config.hpp"

#include <cctype>
#include <fstream>

namespace rolerag {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_quotes(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

}  // namespace

void Config::validate() const {
    if (chunk_size == 0 || overlap >= chunk_size) {
        throw ConfigError("config: need 0 <= overlap < chunk_size");
    }
    if (normalization_k == 0 || retrieval_k == 0) throw ConfigError("config: k values must be >= 1");
    if (embedding_dim == 0) throw ConfigError("config: embedding_dim must be positive");
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    Config config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = strip_quotes(trim(stripped.substr(eq + 1)));

        try {
            if (key == "chunk_size") config.chunk_size = std::stoul(value);
            else if (key == "overlap") config.overlap = std::stoul(value);
            else if (key == "normalization_k") config.normalization_k = std::stoul(value);
            else if (key == "retrieval_k") config.retrieval_k = std::stoul(value);
            else if (key == "normalization_similarity_floor")
                config.normalization_similarity_floor = std::stod(value);
            else if (key == "retrieval_similarity_floor")
                config.retrieval_similarity_floor = std::stod(value);
            else if (key == "token_budget") config.token_budget = std::stoul(value);
            else if (key == "embedding_dim") config.embedding_dim = std::stoul(value);
            else if (key == "merge_token_threshold") config.merge_token_threshold = std::stoul(value);
            else if (key == "profile_relations") config.profile_relations = std::stoul(value);
            else if (key == "judge_temperature") config.judge_temperature = std::stod(value);
            else if (key == "generation_temperature") config.generation_temperature = std::stod(value);
            else if (key == "pipeline_temperature") config.pipeline_temperature = std::stod(value);
            else if (key == "chat_endpoint") config.chat_endpoint = value;
            else if (key == "chat_model") config.chat_model = value;
            else if (key == "embed_model") config.embed_model = value;
            else if (key == "api_key_env") config.api_key_env = value;
            else if (key == "mock_rules_path") config.mock_rules_path = value;
            else if (key == "prompt_language") config.prompt_language = value;
            else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(line_no) + ": bad value for " + key);
        }
    }
    config.validate();
    return config;
}

}  // namespace rolerag

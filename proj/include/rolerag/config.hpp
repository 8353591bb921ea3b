#pragma once

#include <cstddef>
#include <string>

#include "rolerag/errors.hpp"

namespace rolerag {

struct Config {
    std::size_t chunk_size = 600;
    std::size_t overlap = 100;
    std::size_t normalization_k = 5;
    std::size_t retrieval_k = 3;
    double normalization_similarity_floor = 0.5;
    double retrieval_similarity_floor = 0.4;
    std::size_t token_budget = 2000;
    std::size_t embedding_dim = 3072;
    std::size_t merge_token_threshold = 400;
    std::size_t profile_relations = 10;
    double judge_temperature = 0.2;
    double generation_temperature = 0.7;
    double pipeline_temperature = 0.0;  // extraction / normalization / analysis
    std::string chat_endpoint;
    std::string chat_model;
    std::string embed_model;
    std::string api_key_env = "ROLERAG_API_KEY";
    std::string mock_rules_path;
    std::string prompt_language = "en";

    void validate() const;
};

// Key = value lines, '#' comments. Unknown keys are an error.
Config load_config(const std::string& path);

}  // namespace rolerag

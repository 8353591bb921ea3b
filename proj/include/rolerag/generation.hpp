#pragma once
// Role-play prompt assembly and response parsing.

#include <string>

#include "rolerag/gateway.hpp"
#include "rolerag/retrieval.hpp"

namespace rolerag {

struct RolePrompt {
    std::string character;
    std::string description;
    std::string context_block;
    std::string question;
    std::string tuple_delimiter = ":";
    std::string text;  // instantiated template
};

struct RoleResponse {
    std::string character;
    std::string text;
    std::string raw;
    bool format_miss = false;
};

RolePrompt build_role_prompt(const std::string& prompt_template, const std::string& character,
                             const std::string& description, const RetrievedContext& context,
                             const std::string& question,
                             const std::string& tuple_delimiter = ":");

// Strips a leading "character name<delimiter>" prefix case-insensitively;
// without it the raw text is kept whole and counted as a format miss.
RoleResponse parse_role_response(const std::string& raw, const std::string& character,
                                 const std::string& delimiter = ":");

}  // namespace rolerag

#include "rolerag/generation.hpp"

#include <algorithm>
#include <cctype>

#include "rolerag/prompts.hpp"

namespace rolerag {
namespace {

std::string trim_left(const std::string& s) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

RolePrompt build_role_prompt(const std::string& prompt_template, const std::string& character,
                             const std::string& description, const RetrievedContext& context,
                             const std::string& question, const std::string& tuple_delimiter) {
    if (question.empty()) throw InvalidInput("question must be non-empty");
    RolePrompt prompt;
    prompt.character = character;
    prompt.description = description;
    const bool empty_context = context.profile.empty() && context.rejections.empty() &&
                               context.entity_facts.empty() &&
                               context.neighborhood_facts.empty();
    prompt.context_block = empty_context ? "" : render_context(context);  // vanilla mode
    prompt.question = question;
    prompt.tuple_delimiter = tuple_delimiter;
    prompt.text = fill_template(prompt_template, {{"character", character},
                                                  {"description", description},
                                                  {"context_data", prompt.context_block},
                                                  {"question", question},
                                                  {"tuple_delimiter", tuple_delimiter}});
    return prompt;
}

RoleResponse parse_role_response(const std::string& raw, const std::string& character,
                                 const std::string& delimiter) {
    if (raw.empty()) throw InvalidInput("empty role-play response");
    RoleResponse response;
    response.character = character;
    response.raw = raw;

    std::string body = trim_left(raw);
    const std::string prefix = lower(character + delimiter);
    if (lower(body).rfind(prefix, 0) == 0) {
        response.text = trim_left(body.substr(prefix.size()));
    } else {
        response.text = body;
        response.format_miss = true;
    }
    return response;
}

}  // namespace rolerag

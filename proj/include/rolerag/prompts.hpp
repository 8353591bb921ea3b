#pragma once
// Prompt templates are versioned text assets under assets/prompts/.

#include <map>
#include <string>

namespace rolerag {

// Resolution order: explicit dir argument, ROLERAG_ASSETS env var,
// compile-time default (the source tree).
std::string asset_dir(const std::string& override_dir = "");

std::string load_prompt(const std::string& name, const std::string& dir = "");

// Replaces every "{key}" occurrence; unknown placeholders are left intact.
std::string fill_template(std::string tpl, const std::map<std::string, std::string>& slots);

}  // namespace rolerag

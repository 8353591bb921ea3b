#include "rolerag/prompts.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rolerag/errors.hpp"

#ifndef ROLERAG_ASSET_DIR
#define ROLERAG_ASSET_DIR "assets"
#endif

namespace rolerag {

std::string asset_dir(const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (const char* env = std::getenv("ROLERAG_ASSETS")) return env;
    return ROLERAG_ASSET_DIR;
}

std::string load_prompt(const std::string& name, const std::string& dir) {
    std::filesystem::path path =
        std::filesystem::path(asset_dir(dir)) / "prompts" / (name + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("prompt template not found: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fill_template(std::string tpl, const std::map<std::string, std::string>& slots) {
    for (const auto& [key, value] : slots) {
        const std::string needle = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = tpl.find(needle, pos)) != std::string::npos) {
            tpl.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return tpl;
}

}  // namespace rolerag

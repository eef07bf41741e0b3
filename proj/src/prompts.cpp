#include "negsim/prompts.hpp"

#include <cstdlib>

#include "json_util.hpp"
#include "negsim/error.hpp"

#ifndef NEGSIM_DEFAULT_PROMPT_DIR
#define NEGSIM_DEFAULT_PROMPT_DIR "assets/prompts"
#endif

namespace negsim {

std::string render_template(std::string_view tmpl, const TemplateVars& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        std::size_t close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        std::string_view name = tmpl.substr(open + 2, close - open - 2);
        out.append(tmpl.substr(pos, open - pos));
        auto it = vars.find(name);
        if (it == vars.end()) throw ConfigError("template variable '" + std::string(name) + "' has no value");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir.string());
    PromptLibrary lib;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".prompt") continue;
        lib.set(entry.path().stem().string(), detail::read_file(entry.path()));
    }
    return lib;
}

std::filesystem::path PromptLibrary::default_dir() {
    if (const char* env = std::getenv("NEGSIM_PROMPT_DIR"); env && *env) return env;
    return NEGSIM_DEFAULT_PROMPT_DIR;
}

PromptLibrary PromptLibrary::load_default() { return load_dir(default_dir()); }

void PromptLibrary::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

bool PromptLibrary::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& PromptLibrary::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("missing prompt template '" + std::string(name) + "'");
    return it->second;
}

std::string PromptLibrary::render(std::string_view name, const TemplateVars& vars) const {
    try {
        return render_template(get(name), vars);
    } catch (const ConfigError& e) {
        throw ConfigError("prompt '" + std::string(name) + "': " + e.what());
    }
}

}  // namespace negsim

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace negsim {

/// Template variables, e.g. {"issues", "..."} for a `{{issues}}` placeholder.
using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Substitutes `{{name}}` placeholders. Single braces are left untouched so
/// templates can embed literal JSON examples. Throws ConfigError naming the
/// first placeholder without a value.
std::string render_template(std::string_view tmpl, const TemplateVars& vars);

/// Editable prompt assets, one `<name>.prompt` file per role.
class PromptLibrary {
public:
    PromptLibrary() = default;

    /// Loads every *.prompt file under `dir`.
    static PromptLibrary load_dir(const std::filesystem::path& dir);

    /// Directory from $NEGSIM_PROMPT_DIR, else the one shipped with the build.
    static std::filesystem::path default_dir();
    static PromptLibrary load_default();

    void set(std::string name, std::string text);
    bool contains(std::string_view name) const;
    const std::string& get(std::string_view name) const;  // throws ConfigError
    std::string render(std::string_view name, const TemplateVars& vars) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace negsim

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negsim/error.hpp"

namespace negsim {

inline constexpr int kScenarioFormatVersion = 1;

struct OptionItem {
    std::string id;
    std::string description;
};

struct Topic {
    std::string id;
    std::string title;
    std::vector<OptionItem> options;

    const OptionItem* find_option(std::string_view option_id) const;
};

struct PreferenceProfile {
    std::vector<std::string> ranking;  // best first
    std::vector<std::string> unacceptable;
    std::map<std::string, std::string> rationale;  // option id -> why
};

struct Party {
    std::string id;
    std::string display_name;
    std::string identity;
    std::optional<std::string> strategy_hint;
    std::map<std::string, PreferenceProfile> preferences;  // topic id -> profile
};

enum class ConflictKind { General, Competing, Avoiding, Accommodating };

struct ConflictMode {
    ConflictKind kind = ConflictKind::General;
    // Empty means "use the built-in directive for `kind`".
    std::string directive;
};

std::string_view to_string(ConflictKind kind);
ConflictKind conflict_kind_from_string(std::string_view text);  // throws ConfigError

struct Scenario {
    int version = kScenarioFormatVersion;
    std::string id;
    std::string background;
    std::vector<Party> parties;
    std::vector<Topic> topics;
    ConflictMode conflict_mode;
    std::map<std::string, std::string> metadata;

    const Party* find_party(std::string_view party_id) const;
    const Topic* find_topic(std::string_view topic_id) const;
    std::size_t party_index(std::string_view party_id) const;  // npos when absent
};

enum class Severity { Error, Warning };

struct Violation {
    std::string code;  // e.g. "DuplicateOptionId"
    std::string path;  // e.g. "topics[0].options[2].id"
    std::string message;
    Severity severity = Severity::Error;

    bool operator==(const Violation&) const = default;
};

/// Structural check of every scenario invariant. Pure; warnings (such as an
/// unacceptable option ranked above others) are returned alongside errors.
std::vector<Violation> validate_scenario(const Scenario& s);

bool has_errors(const std::vector<Violation>& violations);

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical serialization. `serialize_scenario(parse_scenario(x)) == x` for
/// any file previously produced by this function.
std::string serialize_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Free-text rendering of one party's ranked preferences on one topic; used
/// as that party's turn-0 attitude.
std::string render_preference_attitude(const Topic& topic, const PreferenceProfile& profile);

}  // namespace negsim

#include "negsim/scenario.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace negsim {

using detail::json;
using detail::ordered_json;

const OptionItem* Topic::find_option(std::string_view option_id) const {
    for (const auto& o : options)
        if (o.id == option_id) return &o;
    return nullptr;
}

const Party* Scenario::find_party(std::string_view party_id) const {
    for (const auto& p : parties)
        if (p.id == party_id) return &p;
    return nullptr;
}

const Topic* Scenario::find_topic(std::string_view topic_id) const {
    for (const auto& t : topics)
        if (t.id == topic_id) return &t;
    return nullptr;
}

std::size_t Scenario::party_index(std::string_view party_id) const {
    for (std::size_t i = 0; i < parties.size(); ++i)
        if (parties[i].id == party_id) return i;
    return static_cast<std::size_t>(-1);
}

std::string_view to_string(ConflictKind kind) {
    switch (kind) {
        case ConflictKind::Competing: return "competing";
        case ConflictKind::Avoiding: return "avoiding";
        case ConflictKind::Accommodating: return "accommodating";
        case ConflictKind::General: break;
    }
    return "general";
}

ConflictKind conflict_kind_from_string(std::string_view text) {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "general") return ConflictKind::General;
    if (t == "competing") return ConflictKind::Competing;
    if (t == "avoiding") return ConflictKind::Avoiding;
    if (t == "accommodating") return ConflictKind::Accommodating;
    throw ConfigError("unknown conflict mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void add(std::vector<Violation>& out, std::string code, std::string path, std::string message,
         Severity severity = Severity::Error) {
    out.push_back({std::move(code), std::move(path), std::move(message), severity});
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    if (s.version != kScenarioFormatVersion)
        add(out, "UnsupportedVersion", "version", "unsupported format version " + std::to_string(s.version));
    if (s.id.empty()) add(out, "EmptyId", "id", "scenario id is empty");
    if (s.parties.size() < 2) add(out, "TooFewParties", "parties", "at least two parties are required");
    if (s.topics.empty()) add(out, "TooFewTopics", "topics", "at least one topic is required");
    if (s.conflict_mode.kind == ConflictKind::General && !s.conflict_mode.directive.empty())
        add(out, "GeneralModeDirective", "conflict_mode.directive", "general mode carries no directive");

    std::set<std::string> topic_ids;
    for (std::size_t ti = 0; ti < s.topics.size(); ++ti) {
        const Topic& t = s.topics[ti];
        std::string tpath = "topics[" + std::to_string(ti) + "]";
        if (t.id.empty()) add(out, "EmptyId", tpath + ".id", "topic id is empty");
        if (!topic_ids.insert(t.id).second)
            add(out, "DuplicateTopicId", tpath + ".id", "duplicate topic id '" + t.id + "'");
        if (t.options.size() < 2)
            add(out, "TooFewOptions", tpath + ".options", "topic '" + t.id + "' needs at least two options");
        std::set<std::string> option_ids;
        for (std::size_t oi = 0; oi < t.options.size(); ++oi) {
            const OptionItem& o = t.options[oi];
            std::string opath = tpath + ".options[" + std::to_string(oi) + "]";
            if (o.id.empty()) add(out, "EmptyId", opath + ".id", "option id is empty");
            if (!option_ids.insert(o.id).second)
                add(out, "DuplicateOptionId", opath + ".id",
                    "duplicate option id '" + o.id + "' in topic '" + t.id + "'");
            if (o.description.empty())
                add(out, "EmptyOptionDescription", opath + ".description", "option description is empty");
        }
    }

    std::set<std::string> party_ids;
    for (std::size_t pi = 0; pi < s.parties.size(); ++pi) {
        const Party& p = s.parties[pi];
        std::string ppath = "parties[" + std::to_string(pi) + "]";
        if (p.id.empty()) add(out, "EmptyId", ppath + ".id", "party id is empty");
        if (p.id == "mediator") add(out, "ReservedPartyId", ppath + ".id", "'mediator' is reserved");
        if (!party_ids.insert(p.id).second)
            add(out, "DuplicatePartyId", ppath + ".id", "duplicate party id '" + p.id + "'");

        for (const auto& [topic_id, profile] : p.preferences) {
            std::string prefpath = ppath + ".preferences." + topic_id;
            const Topic* topic = s.find_topic(topic_id);
            if (!topic) {
                add(out, "UnknownTopicRef", prefpath, "party '" + p.id + "' ranks unknown topic '" + topic_id + "'");
                continue;
            }
            std::set<std::string> seen;
            for (std::size_t r = 0; r < profile.ranking.size(); ++r) {
                const std::string& opt = profile.ranking[r];
                std::string rpath = prefpath + ".ranking[" + std::to_string(r) + "]";
                if (!topic->find_option(opt))
                    add(out, "UnknownOptionRef", rpath, "unknown option '" + opt + "' in topic '" + topic_id + "'");
                if (!seen.insert(opt).second)
                    add(out, "DuplicateRankEntry", rpath, "option '" + opt + "' ranked twice");
            }
            if (profile.ranking.empty())
                add(out, "EmptyRanking", prefpath + ".ranking",
                    "party '" + p.id + "' has an empty ranking for topic '" + topic_id + "'");
            for (std::size_t u = 0; u < profile.unacceptable.size(); ++u) {
                const std::string& opt = profile.unacceptable[u];
                std::string upath = prefpath + ".unacceptable[" + std::to_string(u) + "]";
                if (!topic->find_option(opt)) {
                    add(out, "UnknownOptionRef", upath, "unknown option '" + opt + "' in topic '" + topic_id + "'");
                    continue;
                }
                auto it = std::find(profile.ranking.begin(), profile.ranking.end(), opt);
                if (it != profile.ranking.end() && std::next(it) != profile.ranking.end())
                    add(out, "UnacceptableRanked", upath,
                        "option '" + opt + "' is unacceptable but ranked above other options", Severity::Warning);
            }
            for (const auto& [opt, _] : profile.rationale)
                if (!topic->find_option(opt))
                    add(out, "UnknownOptionRef", prefpath + ".rationale." + opt,
                        "rationale for unknown option '" + opt + "'");
        }
        for (const Topic& t : s.topics)
            if (!p.preferences.count(t.id))
                add(out, "MissingPreference", ppath + ".preferences." + t.id,
                    "party '" + p.id + "' has no ranking for topic '" + t.id + "'");
    }
    return out;
}

bool has_errors(const std::vector<Violation>& violations) {
    return std::any_of(violations.begin(), violations.end(),
                       [](const Violation& v) { return v.severity == Severity::Error; });
}

namespace {

std::string summarize(const std::vector<Violation>& violations) {
    std::ostringstream ss;
    ss << "scenario failed validation:";
    for (const auto& v : violations)
        if (v.severity == Severity::Error) ss << "\n  " << v.code << " at " << v.path << ": " << v.message;
    return ss.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorKind::Validation, summarize(violations)), violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& path,
                                     bool required) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) throw ParseError(path + "." + key, "missing required field");
        return out;
    }
    if (!it->is_array()) throw ParseError(path + "." + key, "expected an array of strings");
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& v = (*it)[i];
        if (!v.is_string()) throw ParseError(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(v.get<std::string>());
    }
    return out;
}

const json& require_array(const json& obj, const char* key, const std::string& path) {
    const json& v = detail::require_field(obj, key, path);
    if (!v.is_array()) throw ParseError(path.empty() ? key : path + "." + key, "expected an array");
    return v;
}

PreferenceProfile parse_profile(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    PreferenceProfile p;
    p.ranking = string_list(j, "ranking", path, true);
    p.unacceptable = string_list(j, "unacceptable", path, false);
    if (auto it = j.find("rationale"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError(path + ".rationale", "expected an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) throw ParseError(path + ".rationale." + k, "expected a string");
            p.rationale[k] = v.get<std::string>();
        }
    }
    return p;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    json doc = detail::parse_json_document(text);
    if (!doc.is_object()) throw ParseError("1:1", "scenario document must be an object");

    Scenario s;
    const json& version = detail::require_field(doc, "version", "");
    if (!version.is_number_integer()) throw ParseError("version", "expected an integer");
    s.version = version.get<int>();
    s.id = detail::require_string(doc, "id", "");
    s.background = detail::optional_string(doc, "background", "");

    if (auto it = doc.find("conflict_mode"); it != doc.end()) {
        if (it->is_string()) {
            try {
                s.conflict_mode.kind = conflict_kind_from_string(it->get<std::string>());
            } catch (const ConfigError& e) {
                throw ParseError("conflict_mode", e.what());
            }
        } else if (it->is_object()) {
            try {
                s.conflict_mode.kind = conflict_kind_from_string(detail::require_string(*it, "kind", "conflict_mode"));
            } catch (const ConfigError& e) {
                throw ParseError("conflict_mode.kind", e.what());
            }
            s.conflict_mode.directive = detail::optional_string(*it, "directive", "conflict_mode");
        } else {
            throw ParseError("conflict_mode", "expected a string or an object");
        }
    }

    const json& topics = require_array(doc, "topics", "");
    for (std::size_t ti = 0; ti < topics.size(); ++ti) {
        std::string tpath = "topics[" + std::to_string(ti) + "]";
        const json& tj = topics[ti];
        Topic t;
        t.id = detail::require_string(tj, "id", tpath);
        t.title = detail::optional_string(tj, "title", tpath);
        const json& options = require_array(tj, "options", tpath);
        for (std::size_t oi = 0; oi < options.size(); ++oi) {
            std::string opath = tpath + ".options[" + std::to_string(oi) + "]";
            t.options.push_back({detail::require_string(options[oi], "id", opath),
                                 detail::optional_string(options[oi], "description", opath)});
        }
        s.topics.push_back(std::move(t));
    }

    const json& parties = require_array(doc, "parties", "");
    for (std::size_t pi = 0; pi < parties.size(); ++pi) {
        std::string ppath = "parties[" + std::to_string(pi) + "]";
        const json& pj = parties[pi];
        Party p;
        p.id = detail::require_string(pj, "id", ppath);
        p.display_name = detail::optional_string(pj, "display_name", ppath, p.id);
        p.identity = detail::optional_string(pj, "identity", ppath);
        if (auto it = pj.find("strategy_hint"); it != pj.end() && !it->is_null())
            p.strategy_hint = detail::optional_string(pj, "strategy_hint", ppath);
        const json& prefs = detail::require_field(pj, "preferences", ppath);
        if (!prefs.is_object()) throw ParseError(ppath + ".preferences", "expected an object");
        for (const auto& [topic_id, profile] : prefs.items())
            p.preferences[topic_id] = parse_profile(profile, ppath + ".preferences." + topic_id);
        s.parties.push_back(std::move(p));
    }

    if (auto it = doc.find("metadata"); it != doc.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError("metadata", "expected an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) throw ParseError("metadata." + k, "expected a string");
            s.metadata[k] = v.get<std::string>();
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    Scenario s = parse_scenario(detail::read_file(path));
    auto violations = validate_scenario(s);
    if (has_errors(violations)) throw ValidationError(std::move(violations));
    return s;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_scenario(const Scenario& s) {
    ordered_json doc;
    doc["version"] = s.version;
    doc["id"] = s.id;
    doc["background"] = s.background;
    doc["conflict_mode"] = ordered_json{{"kind", std::string(to_string(s.conflict_mode.kind))},
                                        {"directive", s.conflict_mode.directive}};
    doc["topics"] = ordered_json::array();
    for (const Topic& t : s.topics) {
        ordered_json tj;
        tj["id"] = t.id;
        tj["title"] = t.title;
        tj["options"] = ordered_json::array();
        for (const OptionItem& o : t.options)
            tj["options"].push_back(ordered_json{{"id", o.id}, {"description", o.description}});
        doc["topics"].push_back(std::move(tj));
    }
    doc["parties"] = ordered_json::array();
    for (const Party& p : s.parties) {
        ordered_json pj;
        pj["id"] = p.id;
        pj["display_name"] = p.display_name;
        pj["identity"] = p.identity;
        pj["strategy_hint"] = p.strategy_hint ? ordered_json(*p.strategy_hint) : ordered_json(nullptr);
        pj["preferences"] = ordered_json::object();
        for (const auto& [topic_id, profile] : p.preferences) {
            ordered_json prof;
            prof["ranking"] = profile.ranking;
            prof["unacceptable"] = profile.unacceptable;
            prof["rationale"] = ordered_json::object();
            for (const auto& [opt, why] : profile.rationale) prof["rationale"][opt] = why;
            pj["preferences"][topic_id] = std::move(prof);
        }
        doc["parties"].push_back(std::move(pj));
    }
    doc["metadata"] = ordered_json::object();
    for (const auto& [k, v] : s.metadata) doc["metadata"][k] = v;
    return doc.dump(2, ' ', false, ordered_json::error_handler_t::strict) + "\n";
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
    detail::write_file(path, serialize_scenario(s));
}

std::string render_preference_attitude(const Topic& topic, const PreferenceProfile& profile) {
    static const char* const kOrdinals[] = {"First", "Second", "Third", "Fourth", "Fifth",
                                            "Sixth", "Seventh", "Eighth", "Ninth", "Tenth"};
    std::ostringstream ss;
    ss << topic.title << ":";
    for (std::size_t r = 0; r < profile.ranking.size(); ++r) {
        const OptionItem* opt = topic.find_option(profile.ranking[r]);
        std::string what = opt ? opt->description : profile.ranking[r];
        ss << (r == 0 ? " " : "; ");
        if (r < std::size(kOrdinals))
            ss << kOrdinals[r] << " choice: ";
        else
            ss << "Choice " << (r + 1) << ": ";
        ss << what;
        if (auto it = profile.rationale.find(profile.ranking[r]); it != profile.rationale.end())
            ss << " (" << it->second << ")";
    }
    if (!profile.unacceptable.empty()) {
        ss << "; Unacceptable: ";
        for (std::size_t u = 0; u < profile.unacceptable.size(); ++u) {
            const OptionItem* opt = topic.find_option(profile.unacceptable[u]);
            if (u) ss << ", ";
            ss << (opt ? opt->description : profile.unacceptable[u]);
        }
    }
    ss << ".";
    return ss.str();
}

}  // namespace negsim

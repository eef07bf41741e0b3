#include "negsim/structured.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <initializer_list>

#include "json_util.hpp"
#include "negsim/gateway.hpp"

namespace negsim {

using detail::json;

namespace {

// ---------------------------------------------------------------------------
// Locating and normalizing the object literal

void drop_trailing_comma(std::string& out) {
    std::size_t i = out.size();
    while (i > 0 && std::isspace(static_cast<unsigned char>(out[i - 1]))) --i;
    if (i > 0 && out[i - 1] == ',') out.erase(i - 1, 1);
}

void put_escaped_control(std::string& out, char c) {
    switch (c) {
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
    }
}

/// Normalizes the object literal starting at text[start] == '{'. Returns
/// nullopt when the braces never balance.
std::optional<std::string> normalize_object(std::string_view text, std::size_t start) {
    std::string out;
    out.reserve(text.size() - start);
    int depth = 0;
    std::size_t i = start;
    while (i < text.size()) {
        char c = text[i];
        if (c == '"' || c == '\'') {
            const char quote = c;
            out += '"';
            ++i;
            bool closed = false;
            while (i < text.size()) {
                char d = text[i];
                if (d == '\\' && i + 1 < text.size()) {
                    char e = text[i + 1];
                    if (quote == '\'' && e == '\'') {
                        out += '\'';
                    } else {
                        out += d;
                        out += e;
                    }
                    i += 2;
                    continue;
                }
                if (d == quote) {
                    closed = true;
                    ++i;
                    break;
                }
                if (quote == '\'' && d == '"') {
                    out += "\\\"";
                } else {
                    put_escaped_control(out, d);
                }
                ++i;
            }
            if (!closed) return std::nullopt;
            out += '"';
            continue;
        }
        if (c == '{' || c == '[') {
            ++depth;
            out += c;
            ++i;
            continue;
        }
        if (c == '}' || c == ']') {
            drop_trailing_comma(out);
            out += c;
            ++i;
            if (--depth == 0) return out;
            if (depth < 0) return std::nullopt;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            std::string_view word = text.substr(i, j - i);
            if (word == "True")
                out += "true";
            else if (word == "False")
                out += "false";
            else if (word == "None")
                out += "null";
            else
                out += word;
            i = j;
            continue;
        }
        out += c;
        ++i;
    }
    return std::nullopt;
}

json locate_object(std::string_view text) {
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
        auto normalized = normalize_object(text, pos);
        if (!normalized) continue;
        try {
            json j = json::parse(*normalized);
            if (j.is_object()) return j;
        } catch (const json::parse_error&) {
        }
    }
    throw ExtractionError("no parseable object literal in completion");
}

// ---------------------------------------------------------------------------
// Field access

std::string norm_key(std::string_view key) {
    std::string out;
    bool pending_space = false;
    for (char c : key) {
        if (c == '_' || c == '-' || std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (c == '?' || c == ':') continue;
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

const json* find_field(const json& obj, std::initializer_list<std::string_view> aliases) {
    if (!obj.is_object()) return nullptr;
    for (std::string_view alias : aliases) {
        std::string want = norm_key(alias);
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (norm_key(it.key()) == want) return &*it;
    }
    return nullptr;
}

std::optional<double> as_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::nullopt;
        const char* begin = s.c_str() + b;
        char* end = nullptr;
        double d = std::strtod(begin, &end);
        if (end == begin) return std::nullopt;
        while (*end == ' ' || *end == '\t') ++end;
        if (*end != '\0') return std::nullopt;
        if (!std::isfinite(d)) return std::nullopt;
        return d;
    }
    return std::nullopt;
}

std::optional<bool> as_bool(const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer()) {
        auto i = v.get<long long>();
        if (i == 0 || i == 1) return i == 1;
    }
    if (v.is_string()) {
        std::string s = norm_key(v.get<std::string>());
        if (s == "true" || s == "yes") return true;
        if (s == "false" || s == "no") return false;
    }
    return std::nullopt;
}

std::string as_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump(-1, ' ', false, json::error_handler_t::replace);
}

double require_number(const json& obj, std::initializer_list<std::string_view> aliases, const std::string& field) {
    const json* v = find_field(obj, aliases);
    if (!v) throw SchemaError(field);
    auto d = as_number(*v);
    if (!d) throw SchemaError(field);
    return *d;
}

std::string optional_text(const json& obj, std::initializer_list<std::string_view> aliases) {
    const json* v = find_field(obj, aliases);
    return v ? as_text(*v) : std::string{};
}

double clamp_with_warning(double value, double lo, double hi, const std::string& field, Diagnostics* diag) {
    if (value < lo || value > hi) {
        double clamped = std::clamp(value, lo, hi);
        if (diag) diag->warn("clamped " + field + " from " + json(value).dump() + " to " + json(clamped).dump());
        return clamped;
    }
    return value;
}

std::vector<std::string> string_items(const json* v) {
    std::vector<std::string> out;
    if (!v || v->is_null()) return out;
    if (v->is_array()) {
        for (const auto& item : *v) out.push_back(as_text(item));
    } else {
        out.push_back(as_text(*v));
    }
    return out;
}

bool is_no_mention(std::string_view s) {
    std::string n = norm_key(s);
    while (!n.empty() && (n.back() == '.' || n.back() == '"')) n.pop_back();
    return n.empty() || n == "no mention" || n == "not mentioned";
}

// ---------------------------------------------------------------------------
// Per-shape readers

ThoughtItem read_thought(const json& item, std::size_t index, Diagnostics* diag) {
    ThoughtItem t;
    std::string base = "thoughts[" + std::to_string(index) + "]";
    if (item.is_string()) {
        t.content = item.get<std::string>();
        return t;
    }
    const json* content = find_field(item, {"content", "thought"});
    if (!content || !content->is_string()) throw SchemaError(base + ".content");
    t.content = content->get<std::string>();
    if (const json* p = find_field(item, {"persona", "persona level"})) {
        auto level = as_number(*p);
        if (!level) throw SchemaError(base + ".persona");
        double clamped = clamp_with_warning(std::round(*level), 1, 5, base + ".persona", diag);
        t.persona_level = static_cast<int>(clamped);
    }
    t.stimuli = string_items(find_field(item, {"stimuli", "stimulus"}));
    t.strategy = optional_text(item, {"strategy", "strategy family"});
    if (const json* adj = find_field(item, {"persona adjustment", "adjustment"}); adj && !adj->is_null())
        t.persona_adjustment = as_text(*adj);
    return t;
}

ThoughtsReply read_thoughts(const json& obj, Diagnostics* diag) {
    const json* v = find_field(obj, {"thoughts"});
    if (!v || v->is_null()) throw SchemaError("thoughts");
    ThoughtsReply r;
    if (v->is_array()) {
        for (std::size_t i = 0; i < v->size(); ++i) r.thoughts.push_back(read_thought((*v)[i], i, diag));
    } else if (v->is_object()) {
        if (!v->empty()) r.thoughts.push_back(read_thought(*v, 0, diag));
    } else {
        throw SchemaError("thoughts");
    }
    return r;
}

GenericDecisionReply read_generic_decision(const json& obj) {
    const json* v = find_field(obj, {"should engage", "should engag", "engage"});
    if (!v) throw SchemaError("should engage");
    auto b = as_bool(*v);
    if (!b) throw SchemaError("should engage");
    return {*b, optional_text(obj, {"reason", "reasoning"})};
}

SocialDecisionReply read_social_decision(const json& obj, Diagnostics* diag) {
    SocialDecisionReply r;
    r.rating = clamp_with_warning(require_number(obj, {"rating"}, "rating"), 1.0, 5.0, "rating", diag);
    if (const json* v = find_field(obj, {"should engage", "should engag", "engage"})) {
        auto b = as_bool(*v);
        if (!b) throw SchemaError("should engage");
        r.should_engage = *b;
    }
    if (const json* reason = find_field(obj, {"reason", "reasoning"})) {
        if (reason->is_object()) {
            const json* inner = find_field(*reason, {"reasoning"});
            r.reasoning = inner ? as_text(*inner) : as_text(*reason);
        } else {
            r.reasoning = as_text(*reason);
        }
    }
    r.stimuli = string_items(find_field(obj, {"stimuli"}));
    const json* issues = find_field(obj, {"issues", "surfaced issues"});
    const json& source = issues && issues->is_object() ? *issues : obj;
    for (std::size_t d = 0; d < kSocioDimNames.size(); ++d) {
        const json* v = find_field(source, {kSocioDimNames[d]});
        if (v && !v->is_null()) {
            std::string text = as_text(*v);
            if (!text.empty()) r.issues[d] = std::move(text);
        }
    }
    return r;
}

AttitudeMapReply read_attitudes(const json& obj) {
    const json* v = find_field(obj, {"attitude", "attitudes"});
    if (!v || !v->is_object()) throw SchemaError("attitude");
    AttitudeMapReply r;
    for (auto it = v->begin(); it != v->end(); ++it) {
        if (it->is_null()) {
            r.attitudes[it.key()] = std::nullopt;
            continue;
        }
        if (!it->is_string()) throw SchemaError("attitude." + it.key());
        std::string stance = it->get<std::string>();
        if (is_no_mention(stance))
            r.attitudes[it.key()] = std::nullopt;
        else
            r.attitudes[it.key()] = std::move(stance);
    }
    return r;
}

AgreementScoresReply read_agreement(const json& obj, Diagnostics* diag) {
    AgreementScoresReply r;
    const json* scores = find_field(obj, {"scores"});
    const json& source = scores && scores->is_object() ? *scores : obj;
    for (std::size_t d = 0; d < kAgreementDimNames.size(); ++d) {
        std::string field(kAgreementDimNames[d]);
        r.dims[d] = clamp_with_warning(require_number(source, {kAgreementDimNames[d]}, field), 0.0, 1.0, field, diag);
    }
    if (const json* o = find_field(obj, {"overall consensus score", "overall score", "overall"})) {
        if (auto d = as_number(*o)) r.judge_overall = clamp_with_warning(*d, 0.0, 1.0, "overall", diag);
    }
    r.reasoning = optional_text(obj, {"reasoning", "reason"});
    return r;
}

SingleAgreementReply read_single_agreement(const json& obj, Diagnostics* diag) {
    SingleAgreementReply r;
    r.score = clamp_with_warning(
        require_number(obj, {"consensus score", "overall consensus score", "score"}, "consensus score"), 0.0, 1.0,
        "consensus score", diag);
    r.reasoning = optional_text(obj, {"reasoning", "reason"});
    return r;
}

MotivationReply read_motivation(const json& obj, Diagnostics* diag) {
    MotivationReply r;
    r.rating = clamp_with_warning(require_number(obj, {"rating", "motivation", "score"}, "rating"), 1.0, 5.0,
                                  "rating", diag);
    r.reasoning = optional_text(obj, {"reasoning", "reason"});
    return r;
}

CandidateEvalReply read_candidate_eval(const json& obj, Diagnostics* diag) {
    CandidateEvalReply r;
    r.rating = clamp_with_warning(require_number(obj, {"rating", "overall"}, "rating"), 1.0, 5.0, "rating", diag);
    const json* scores = find_field(obj, {"scores", "dimension scores"});
    const json& source = scores && scores->is_object() ? *scores : obj;
    for (std::size_t d = 0; d < kSocioDimNames.size(); ++d) {
        const json* v = find_field(source, {kSocioDimNames[d]});
        std::optional<double> value;
        if (v) {
            if (v->is_object()) {
                if (const json* s = find_field(*v, {"score", "rating"})) value = as_number(*s);
            } else {
                value = as_number(*v);
            }
            if (!value) throw SchemaError(std::string(kSocioDimNames[d]));
            r.dims[d] = clamp_with_warning(*value, 1.0, 5.0, std::string(kSocioDimNames[d]), diag);
        } else {
            r.dims[d] = r.rating;
        }
    }
    r.reasoning = optional_text(obj, {"reasoning", "reason"});
    return r;
}

MiScoresReply read_mi(const json& obj, Diagnostics* diag) {
    MiScoresReply r;
    for (std::size_t d = 0; d < kSocioDimNames.size(); ++d) {
        std::string field(kSocioDimNames[d]);
        const json* v = find_field(obj, {kSocioDimNames[d]});
        if (!v) throw SchemaError(field);
        std::optional<double> score;
        if (v->is_object()) {
            const json* s = find_field(*v, {"score", "rating"});
            if (!s) throw SchemaError(field + ".score");
            score = as_number(*s);
            r.reasoning[d] = optional_text(*v, {"reasoning", "reason"});
        } else {
            score = as_number(*v);
        }
        if (!score) throw SchemaError(field + ".score");
        if (*score < 0) {
            r.scores[d] = kNotApplicable;
        } else {
            double rounded = std::round(*score);
            if (rounded != *score && diag) diag->warn("rounded " + field + " score " + json(*score).dump());
            r.scores[d] = static_cast<int>(clamp_with_warning(rounded, 1.0, 5.0, field, diag));
        }
    }
    return r;
}

std::string require_text(const json& obj, std::initializer_list<std::string_view> aliases, const std::string& field) {
    const json* v = find_field(obj, aliases);
    if (!v || !v->is_string()) throw SchemaError(field);
    return v->get<std::string>();
}

}  // namespace

StructuredValue extract_structured(std::string_view text, Shape shape, Diagnostics* diag) {
    json obj = locate_object(text);
    switch (shape) {
        case Shape::Thoughts: return read_thoughts(obj, diag);
        case Shape::GenericDecision: return read_generic_decision(obj);
        case Shape::SocialDecision: return read_social_decision(obj, diag);
        case Shape::AttitudeMap: return read_attitudes(obj);
        case Shape::AgreementScores: return read_agreement(obj, diag);
        case Shape::SingleAgreement: return read_single_agreement(obj, diag);
        case Shape::MotivationRating: return read_motivation(obj, diag);
        case Shape::CandidateEval: return read_candidate_eval(obj, diag);
        case Shape::MiScores: return read_mi(obj, diag);
        case Shape::Articulation:
            return ArticulationReply{require_text(obj, {"articulation", "message", "speech", "text"}, "articulation")};
        case Shape::Message: return MessageReply{require_text(obj, {"message", "articulation", "text"}, "message")};
        case Shape::TargetTopic:
            return TargetTopicReply{require_text(obj, {"topic", "target topic", "topic id"}, "topic")};
    }
    throw ExtractionError("unknown shape");
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

json render_json(const ThoughtsReply& v) {
    json arr = json::array();
    for (const auto& t : v.thoughts) {
        json item{{"persona", t.persona_level}, {"content", t.content}, {"stimuli", t.stimuli}};
        if (!t.strategy.empty()) item["strategy"] = t.strategy;
        if (t.persona_adjustment) item["persona adjustment"] = *t.persona_adjustment;
        arr.push_back(std::move(item));
    }
    return {{"thoughts", arr}};
}

json render_json(const GenericDecisionReply& v) { return {{"should engage", v.should_engage}, {"reason", v.reason}}; }

json render_json(const SocialDecisionReply& v) {
    json issues = json::object();
    for (std::size_t d = 0; d < 4; ++d)
        if (v.issues[d]) issues[std::string(kSocioDimNames[d])] = *v.issues[d];
    return {{"reason", {{"reasoning", v.reasoning}}},
            {"stimuli", v.stimuli},
            {"issues", issues},
            {"should engage", v.should_engage},
            {"rating", v.rating}};
}

json render_json(const AttitudeMapReply& v) {
    json att = json::object();
    for (const auto& [k, stance] : v.attitudes) att[k] = stance ? json(*stance) : json(std::string(kNoMention));
    return {{"attitude", att}};
}

json render_json(const AgreementScoresReply& v) {
    json j{{"reasoning", v.reasoning}};
    for (std::size_t d = 0; d < 5; ++d) j[std::string(kAgreementDimNames[d])] = v.dims[d];
    if (v.judge_overall) j["overall consensus score"] = *v.judge_overall;
    return j;
}

json render_json(const SingleAgreementReply& v) { return {{"reasoning", v.reasoning}, {"consensus score", v.score}}; }

json render_json(const MotivationReply& v) { return {{"reasoning", v.reasoning}, {"rating", v.rating}}; }

json render_json(const CandidateEvalReply& v) {
    json j{{"reasoning", v.reasoning}, {"rating", v.rating}};
    for (std::size_t d = 0; d < 4; ++d) j[std::string(kSocioDimNames[d])] = v.dims[d];
    return j;
}

json render_json(const MiScoresReply& v) {
    json j = json::object();
    for (std::size_t d = 0; d < 4; ++d)
        j[std::string(kSocioDimNames[d])] = {{"reasoning", v.reasoning[d]}, {"score", v.scores[d]}};
    return j;
}

json render_json(const ArticulationReply& v) { return {{"articulation", v.text}}; }
json render_json(const MessageReply& v) { return {{"message", v.text}}; }
json render_json(const TargetTopicReply& v) { return {{"topic", v.topic}}; }

}  // namespace

std::string render_structured(const StructuredValue& value) {
    return std::visit([](const auto& v) { return render_json(v).dump(-1, ' ', false, json::error_handler_t::replace); },
                      value);
}

Shape shape_of(const StructuredValue& value) {
    constexpr Shape kShapes[] = {Shape::Thoughts,         Shape::GenericDecision, Shape::SocialDecision,
                                 Shape::AttitudeMap,      Shape::AgreementScores, Shape::SingleAgreement,
                                 Shape::MotivationRating, Shape::CandidateEval,   Shape::MiScores,
                                 Shape::Articulation,     Shape::Message,         Shape::TargetTopic};
    return kShapes[value.index()];
}

}  // namespace negsim

#include "negsim/types.hpp"

#include <algorithm>
#include <sstream>

#include "json_util.hpp"

namespace negsim {

using detail::json;

std::string_view to_string(StrategyFamily f) {
    switch (f) {
        case StrategyFamily::Facilitative: return "facilitative";
        case StrategyFamily::Evaluative: return "evaluative";
        case StrategyFamily::Transformative: return "transformative";
        case StrategyFamily::ProblemSolving: return "problem_solving";
        case StrategyFamily::Unlabeled: break;
    }
    return "unlabeled";
}

StrategyFamily strategy_family_from_label(std::string_view label) {
    std::string l(label);
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l.find("facilitat") != std::string::npos) return StrategyFamily::Facilitative;
    if (l.find("evaluat") != std::string::npos) return StrategyFamily::Evaluative;
    if (l.find("transform") != std::string::npos) return StrategyFamily::Transformative;
    if (l.find("problem") != std::string::npos || l.find("settlement") != std::string::npos)
        return StrategyFamily::ProblemSolving;
    return StrategyFamily::Unlabeled;
}

std::string_view to_string(TurnKind k) {
    switch (k) {
        case TurnKind::Mediator: return "mediator";
        case TurnKind::Stall: return "stall";
        case TurnKind::Participant: break;
    }
    return "participant";
}

namespace {

TurnKind turn_kind_from(std::string_view s) {
    if (s == "mediator") return TurnKind::Mediator;
    if (s == "stall") return TurnKind::Stall;
    if (s == "participant") return TurnKind::Participant;
    throw ParseError("kind", "unknown turn kind '" + std::string(s) + "'");
}

json issues_json(const std::array<std::optional<std::string>, 4>& issues) {
    static const char* const kKeys[] = {"perception", "emotional", "cognitive", "communication"};
    json j = json::object();
    for (std::size_t d = 0; d < 4; ++d)
        if (issues[d]) j[kKeys[d]] = *issues[d];
    return j;
}

std::array<std::optional<std::string>, 4> issues_from(const json& j) {
    static const char* const kKeys[] = {"perception", "emotional", "cognitive", "communication"};
    std::array<std::optional<std::string>, 4> out;
    for (std::size_t d = 0; d < 4; ++d)
        if (auto it = j.find(kKeys[d]); it != j.end() && it->is_string()) out[d] = it->get<std::string>();
    return out;
}

json thought_json(const Thought& t) {
    json j{{"content", t.content}, {"persona", t.persona_level}, {"stimuli", t.stimuli}};
    j["rating"] = t.rating ? json(*t.rating) : json(nullptr);
    if (!t.strategy.empty()) j["strategy"] = t.strategy;
    if (t.persona_adjustment) j["persona_adjustment"] = *t.persona_adjustment;
    return j;
}

Thought thought_from(const json& j) {
    Thought t;
    t.content = j.at("content").get<std::string>();
    t.persona_level = j.value("persona", 3);
    t.stimuli = j.value("stimuli", std::vector<std::string>{});
    if (auto it = j.find("rating"); it != j.end() && it->is_number()) t.rating = it->get<double>();
    t.strategy = j.value("strategy", std::string{});
    if (auto it = j.find("persona_adjustment"); it != j.end() && it->is_string()) t.persona_adjustment = it->get<std::string>();
    return t;
}

json decision_json(const InterventionDecision& d) {
    json j{{"consulted", d.consulted}, {"engage", d.engage}, {"reasoning", d.reasoning}, {"stimuli", d.stimuli}};
    j["rating"] = d.rating ? json(*d.rating) : json(nullptr);
    j["surfaced_issues"] = issues_json(d.surfaced_issues);
    return j;
}

InterventionDecision decision_from(const json& j) {
    InterventionDecision d;
    d.consulted = j.value("consulted", true);
    d.engage = j.at("engage").get<bool>();
    d.reasoning = j.value("reasoning", std::string{});
    d.stimuli = j.value("stimuli", std::vector<std::string>{});
    if (auto it = j.find("rating"); it != j.end() && it->is_number()) d.rating = it->get<double>();
    if (auto it = j.find("surfaced_issues"); it != j.end()) d.surfaced_issues = issues_from(*it);
    return d;
}

json candidate_json(const StrategyCandidate& c) {
    return {{"content", c.content},
            {"family", std::string(to_string(c.family))},
            {"dimension_scores", c.dimension_scores},
            {"overall", c.overall}};
}

StrategyCandidate candidate_from(const json& j) {
    StrategyCandidate c;
    c.content = j.at("content").get<std::string>();
    c.family = strategy_family_from_label(j.value("family", std::string{}));
    c.dimension_scores = j.at("dimension_scores").get<std::array<double, 4>>();
    c.overall = j.at("overall").get<double>();
    return c;
}

}  // namespace

std::string serialize_transcript(const Transcript& t) {
    std::string out;
    json header{{"type", "header"},
                {"run_id", t.run_id},
                {"scenario_id", t.scenario_id},
                {"condition", t.condition},
                {"budget", t.budget},
                {"config", t.config_snapshot},
                {"scenario", json::parse(serialize_scenario(t.scenario))}};
    out += detail::jsonl_line(header);
    for (const Turn& turn : t.turns) {
        json j{{"type", "turn"},
               {"index", turn.index},
               {"kind", std::string(to_string(turn.kind))},
               {"speaker", turn.speaker},
               {"utterance", turn.utterance},
               {"timestamp", turn.timestamp},
               {"decision_latency_s", turn.decision_latency_s},
               {"is_intervention", turn.is_intervention()}};
        if (turn.linked_thought) j["thought"] = thought_json(*turn.linked_thought);
        if (turn.decision) j["decision"] = decision_json(*turn.decision);
        if (!turn.candidates.empty()) {
            j["candidates"] = json::array();
            for (const auto& c : turn.candidates) j["candidates"].push_back(candidate_json(c));
        }
        if (turn.chosen_candidate) j["chosen_candidate"] = *turn.chosen_candidate;
        if (turn.target_topic) j["target_topic"] = *turn.target_topic;
        out += detail::jsonl_line(j);
    }
    out += detail::jsonl_line(json{{"type", "end"},
                                   {"reason", t.end.reason},
                                   {"detail", t.end.detail},
                                   {"turns", t.turns.size()}});
    return out;
}

Transcript parse_transcript(std::string_view text) {
    Transcript t;
    bool have_header = false;
    bool have_end = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        std::string where = "line " + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where, e.what());
        }
        try {
            std::string type = rec.at("type").get<std::string>();
            if (type == "header") {
                t.run_id = rec.at("run_id").get<std::string>();
                t.scenario_id = rec.at("scenario_id").get<std::string>();
                t.condition = rec.value("condition", std::string{});
                t.budget = rec.value("budget", 0);
                t.config_snapshot = rec.value("config", json::object());
                t.scenario = parse_scenario(rec.at("scenario").dump());
                have_header = true;
            } else if (type == "turn") {
                Turn turn;
                turn.index = rec.at("index").get<int>();
                turn.kind = turn_kind_from(rec.at("kind").get<std::string>());
                turn.speaker = rec.value("speaker", std::string{});
                turn.utterance = rec.value("utterance", std::string{});
                turn.timestamp = rec.value("timestamp", 0.0);
                turn.decision_latency_s = rec.value("decision_latency_s", 0.0);
                if (auto it = rec.find("thought"); it != rec.end()) turn.linked_thought = thought_from(*it);
                if (auto it = rec.find("decision"); it != rec.end()) turn.decision = decision_from(*it);
                if (auto it = rec.find("candidates"); it != rec.end())
                    for (const auto& c : *it) turn.candidates.push_back(candidate_from(c));
                if (auto it = rec.find("chosen_candidate"); it != rec.end())
                    turn.chosen_candidate = it->get<std::size_t>();
                if (auto it = rec.find("target_topic"); it != rec.end()) turn.target_topic = it->get<std::string>();
                if (turn.index != static_cast<int>(t.turns.size()) + 1)
                    throw ParseError(where, "turn indices must be contiguous from 1");
                t.turns.push_back(std::move(turn));
            } else if (type == "end") {
                t.end.reason = rec.value("reason", std::string("budget"));
                t.end.detail = rec.value("detail", std::string{});
                have_end = true;
            } else {
                throw ParseError(where, "unknown record type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw ParseError(where, e.what());
        }
    }
    if (!have_header) throw ParseError("line 1", "transcript has no header record");
    if (!have_end) {
        t.end.reason = "truncated";
        t.end.detail = "no end record";
    }
    return t;
}

Transcript load_transcript(const std::filesystem::path& path) { return parse_transcript(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Prompt context rendering

std::string display_name(const Scenario& s, std::string_view speaker) {
    if (speaker == kMediatorId) return "Mediator";
    if (const Party* p = s.find_party(speaker)) return p->display_name;
    return std::string(speaker);
}

std::string render_history(const ConversationContext& ctx) {
    if (!ctx.turns || ctx.turns->empty()) return "(the conversation has not started yet)";
    std::ostringstream ss;
    const auto& turns = *ctx.turns;
    std::size_t first = turns.size() > ctx.history_window ? turns.size() - ctx.history_window : 0;
    bool any = false;
    for (std::size_t i = first; i < turns.size(); ++i) {
        const Turn& t = turns[i];
        if (t.kind == TurnKind::Stall) continue;
        ss << "CON#" << t.index << " " << display_name(*ctx.scenario, t.speaker) << ": " << t.utterance << "\n";
        any = true;
    }
    if (!any) return "(nobody has spoken yet)";
    return ss.str();
}

std::string render_issues(const Scenario& s) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < s.topics.size(); ++i)
        ss << (i + 1) << ". " << s.topics[i].title << " [" << s.topics[i].id << "]\n";
    return ss.str();
}

std::string render_options(const Scenario& s) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < s.topics.size(); ++i) {
        const Topic& t = s.topics[i];
        ss << (i + 1) << ". " << t.title << ":\n";
        for (const auto& o : t.options) ss << "   (" << o.id << ") " << o.description << "\n";
    }
    return ss.str();
}

std::string render_committee(const Scenario& s) {
    std::ostringstream ss;
    for (const auto& p : s.parties) {
        ss << "- " << p.display_name;
        if (!p.identity.empty()) {
            // First sentence of the identity text is the public role.
            auto stop = p.identity.find_first_of(".\n");
            ss << ": " << p.identity.substr(0, stop == std::string::npos ? p.identity.size() : stop + 1);
        }
        ss << "\n";
    }
    return ss.str();
}

std::string render_overall_context(const Scenario& s) {
    std::ostringstream ss;
    ss << s.background << "\nKey issues:\n" << render_issues(s);
    return ss.str();
}

}  // namespace negsim

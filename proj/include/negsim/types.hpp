#pragma once

// Conversation-level domain types shared by participants, the mediator, the
// orchestrator and the evaluation pipeline.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "negsim/scenario.hpp"

namespace negsim {

inline constexpr std::string_view kMediatorId = "mediator";

struct Thought {
    std::string content;
    int persona_level = 3;
    std::vector<std::string> stimuli;  // "CON#3", "MEM#1"...
    std::optional<double> rating;      // [1.0, 5.0] once rated
    std::string strategy;
    std::optional<std::string> persona_adjustment;
};

enum class StrategyFamily { Facilitative, Evaluative, Transformative, ProblemSolving, Unlabeled };

std::string_view to_string(StrategyFamily f);
StrategyFamily strategy_family_from_label(std::string_view label);

struct StrategyCandidate {
    std::string content;
    StrategyFamily family = StrategyFamily::Unlabeled;
    std::array<double, 4> dimension_scores{};  // perception, emotional, cognitive, communication
    double overall = 1.0;
};

struct InterventionDecision {
    bool consulted = false;  // false when gated without a model call
    bool engage = false;
    std::string reasoning;
    std::optional<double> rating;  // socially intelligent mediator only
    std::vector<std::string> stimuli;
    std::array<std::optional<std::string>, 4> surfaced_issues;
};

struct Utterance {
    std::string speaker;
    std::string text;
};

enum class TurnKind { Participant, Mediator, Stall };

std::string_view to_string(TurnKind k);

struct Turn {
    int index = 0;  // 1-based
    TurnKind kind = TurnKind::Participant;
    std::string speaker;  // party id, "mediator", or empty for stalls
    std::string utterance;
    double timestamp = 0.0;  // seconds since run start, at commit
    double decision_latency_s = 0.0;
    std::optional<Thought> linked_thought;
    std::optional<InterventionDecision> decision;  // mediator decision taken this turn, if consulted
    std::vector<StrategyCandidate> candidates;
    std::optional<std::size_t> chosen_candidate;
    std::optional<std::string> target_topic;

    bool is_intervention() const noexcept { return kind == TurnKind::Mediator; }
};

struct EndMarker {
    std::string reason = "budget";  // "budget" | "early_consensus" | "truncated"
    std::string detail;
};

struct Transcript {
    std::string run_id;
    std::string scenario_id;
    std::string condition;
    int budget = 0;
    nlohmann::json config_snapshot = nlohmann::json::object();
    Scenario scenario;
    std::vector<Turn> turns;
    EndMarker end;

    bool truncated() const noexcept { return end.reason != "budget"; }
};

/// One JSON record per line: header, turns, end marker.
std::string serialize_transcript(const Transcript& t);
Transcript parse_transcript(std::string_view text);
Transcript load_transcript(const std::filesystem::path& path);

/// What a prompt may see: the public transcript so far.
struct ConversationContext {
    const Scenario* scenario = nullptr;
    const std::vector<Turn>* turns = nullptr;
    int turn_index = 1;  // the turn being produced
    std::size_t history_window = 30;
};

std::string display_name(const Scenario& s, std::string_view speaker);
std::string render_history(const ConversationContext& ctx);
std::string render_issues(const Scenario& s);
std::string render_options(const Scenario& s);
std::string render_committee(const Scenario& s);
std::string render_overall_context(const Scenario& s);

}  // namespace negsim

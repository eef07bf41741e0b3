#pragma once

// The turn loop: mediator preemption, motivated-thought speaker selection,
// turn budget and batch execution.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "negsim/mediator.hpp"
#include "negsim/participants.hpp"

namespace negsim {

struct RunConfig {
    MediatorKind mediator_kind = MediatorKind::SociallyIntelligent;
    std::optional<ConflictKind> mode_override;
    std::optional<int> turn_budget;
    int runs_per_condition = 5;
    int thoughts_per_agent = 3;
    int parallelism = 1;
    double engage_threshold = 4.0;
    int min_turn_gap = 4;
    int strategy_candidates = 3;
    int stall_limit = 3;
    std::size_t history_window = 30;
    std::size_t memory_recent = 12;
    double generation_temperature = 0.7;
    double judge_temperature = 0.0;
    std::string participant_backend = "default";
    std::string mediator_backend = "default";
    std::string judge_backend = "default";
    nlohmann::json backends = nlohmann::json::object();  // descriptive, recorded in the snapshot
};

void validate_run_config(const RunConfig& cfg);  // throws ConfigError
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);  // absent keys keep defaults

/// Conflict mode in effect for `s` under `cfg`.
ConflictMode effective_mode(const Scenario& s, const RunConfig& cfg);
std::string condition_name(const Scenario& s, const RunConfig& cfg);  // "<mode>-<mediator>"
std::string make_run_id(const Scenario& s, const RunConfig& cfg, int k);

/// `override` when given, else max(4 * topics * parties, 20).
int turn_budget(const Scenario& s, std::optional<int> override = std::nullopt);

class NoThoughts : public DomainError {
public:
    NoThoughts() : DomainError("NoThoughts: no party produced a rated thought") {}
};

struct SpeakerCandidate {
    std::string party_id;
    Thought thought;  // the party's best rated thought
    int silence = 0;  // turns since the party last spoke
    std::size_t declaration_index = 0;
};

/// Index of the winner: highest rating, then longest silence, then earliest
/// declaration. Throws NoThoughts on empty input.
std::size_t select_speaker(const std::vector<SpeakerCandidate>& candidates);

struct RunEnvironment {
    Gateway* gateway = nullptr;
    const PromptLibrary* prompts = nullptr;
};

/// One negotiation. A backend failure that survives retries ends the run
/// with a "truncated" end marker instead of throwing.
Transcript run_negotiation(const RunEnvironment& env, const Scenario& s, std::vector<ParticipantAgent> agents,
                           MediatorAgent mediator, const RunConfig& cfg, std::string run_id);

/// Builds agents and mediator from `s` and `cfg`, then runs.
Transcript run_negotiation(const RunEnvironment& env, const Scenario& s, const RunConfig& cfg, std::string run_id);

/// runs_per_condition runs with distinct ids. `on_run` fires after each run.
std::vector<Transcript> run_batch(const RunEnvironment& env, const Scenario& s, const RunConfig& cfg,
                                  const std::function<void(const Transcript&)>& on_run = {});

}  // namespace negsim

#pragma once

// Plug-in mediators: deciding when to step in, then what to say.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negsim/call_site.hpp"
#include "negsim/participants.hpp"
#include "negsim/types.hpp"

namespace negsim {

enum class MediatorKind { None, Generic, SociallyIntelligent };

std::string_view to_string(MediatorKind kind);  // "none" | "generic" | "social"
MediatorKind mediator_kind_from_string(std::string_view text);  // throws ConfigError

class EmptyCandidates : public DomainError {
public:
    EmptyCandidates() : DomainError("EmptyCandidates: no strategy candidates to select from") {}
};

struct MediatorAgent {
    MediatorKind kind = MediatorKind::SociallyIntelligent;
    double engage_threshold = 4.0;
    int min_turn_gap = 4;
    std::string system_prompt;  // scenario background + mediator guidelines
    std::vector<MemoryItem> memory;
    std::vector<Thought> previous_thoughts;
    int last_spoke = 0;  // turn index of the latest intervention, 0 = never
};

MediatorAgent make_mediator(MediatorKind kind, const Scenario& s, const PromptLibrary& prompts,
                            double engage_threshold = 4.0, int min_turn_gap = 4);

/// True when the cadence rule forbids consulting the mediator at `turn_index`:
/// it has spoken before and fewer than `min_turn_gap` turns have passed since.
bool cadence_blocks(const MediatorAgent& m, int turn_index);

/// Never calls the gateway for kind None or when cadence_blocks. An unusable
/// judge reply after one retry yields engage=false with a warning.
InterventionDecision decide_intervention(const CallSite& site, const MediatorAgent& m, const ConversationContext& ctx);

/// k candidate strategies from one generation call, each scored by its own
/// evaluation call. Unusable candidates are dropped with a warning; an empty
/// result means the intervention should be abandoned.
std::vector<StrategyCandidate> generate_candidates(const CallSite& site, const MediatorAgent& m,
                                                   const ConversationContext& ctx, int k);

/// Index of the highest overall; earliest wins ties. Throws EmptyCandidates.
std::size_t select_strategy(const std::vector<StrategyCandidate>& candidates);

/// Social mediators articulate `chosen`; generic mediators compose a message
/// from the context alone. nullopt means the intervention is abandoned.
std::optional<Utterance> compose_intervention(const CallSite& site, const MediatorAgent& m,
                                              const StrategyCandidate* chosen, const ConversationContext& ctx);

/// Asks which single topic an intervention mainly addresses. Returns a topic
/// id of `s`, or nullopt when the judge's answer matches none.
std::optional<std::string> ask_target_topic(const CallSite& site, const Scenario& s, const Utterance& speech,
                                            const ConversationContext& ctx);

/// Resolves a free-text topic reference (id or title, any case) to an id.
std::optional<std::string> resolve_topic(const Scenario& s, std::string_view text);

}  // namespace negsim

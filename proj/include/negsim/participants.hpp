#pragma once

// Simulated negotiators: private thought formation, motivation rating and
// speech.

#include <optional>
#include <string>
#include <vector>

#include "negsim/call_site.hpp"
#include "negsim/scenario.hpp"
#include "negsim/types.hpp"

namespace negsim {

enum class MemoryKind { Background, Preference, Observation };

struct MemoryItem {
    int index = 0;
    std::string text;
    MemoryKind kind = MemoryKind::Observation;
};

/// Appends with the next free index.
void remember(std::vector<MemoryItem>& memory, std::string text, MemoryKind kind);

/// Background and preference items always; only the `recent` newest
/// observations. One "MEM#i: text" line each.
std::string render_memories(const std::vector<MemoryItem>& memory, std::size_t recent = 12);

struct ParticipantAgent {
    std::string party_id;
    std::string display_name;
    std::string identity_prompt;  // system prompt: scenario background + identity + opinions + strategy
    ConflictMode conflict_mode;
    std::vector<MemoryItem> memory;
    std::vector<Thought> previous_thoughts;
};

/// Directive paragraph injected into participant prompts; "" for General.
/// A scenario-supplied directive replaces the built-in text.
std::string render_mode_directive(const ConflictMode& mode);

/// Builds an agent whose identity prompt embeds every topic of `s` with the
/// party's full preference profile. `mode` defaults to the scenario's.
ParticipantAgent make_participant(const Scenario& s, const Party& party, const PromptLibrary& prompts,
                                  std::optional<ConflictMode> mode = std::nullopt);

std::vector<ParticipantAgent> make_participants(const Scenario& s, const PromptLibrary& prompts,
                                                std::optional<ConflictMode> mode = std::nullopt);

/// Up to `n` thoughts from one completion. Unusable output after one
/// re-prompt yields an empty list and a warning.
std::vector<Thought> generate_thoughts(const CallSite& site, const ParticipantAgent& agent,
                                       const ConversationContext& ctx, int n, std::size_t memory_recent = 12);

/// Returns `thought` with its rating in [1.0, 5.0] at one decimal. A reply
/// that cannot be read falls back to 1.0 with a warning.
Thought rate_motivation(const CallSite& site, const ParticipantAgent& agent, Thought thought,
                        const ConversationContext& ctx, std::size_t memory_recent = 12);

/// nullopt means the turn is aborted (unusable or empty text after retry).
std::optional<Utterance> articulate(const CallSite& site, const ParticipantAgent& agent, const Thought& thought,
                                    const ConversationContext& ctx, std::size_t memory_recent = 12);

/// "1. text (persona 3)" lines, or a placeholder when empty.
std::string render_thoughts(const std::vector<Thought>& thoughts);

}  // namespace negsim

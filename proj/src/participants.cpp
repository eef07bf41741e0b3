#include "negsim/participants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace negsim {

namespace {

constexpr const char* kCompetingDirective =
    "Conflict style: competing. Hold firm positions on every issue and put your own interests first. "
    "Concede only when you receive something of equal or greater value in return, and challenge proposals "
    "that weaken your position.";

constexpr const char* kAvoidingDirective =
    "Conflict style: avoiding. Steer away from contentious issues where you can. Prefer to postpone hard "
    "questions, give noncommittal answers when pressed and let others raise the difficult points first.";

constexpr const char* kAccommodatingDirective =
    "Conflict style: accommodating. Be receptive to the views of others and willing to cooperate. Look for "
    "ways to meet their concerns, even at some cost to your own preferences, when it helps the group agree.";

std::string ordinal(std::size_t i) {
    static const char* const kWords[] = {"First", "Second", "Third", "Fourth", "Fifth",
                                         "Sixth", "Seventh", "Eighth", "Ninth", "Tenth"};
    if (i < std::size(kWords)) return kWords[i];
    return "Choice " + std::to_string(i + 1);
}

std::string render_opinions(const Scenario& s, const Party& party) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < s.topics.size(); ++i) {
        const Topic& topic = s.topics[i];
        ss << (i + 1) << ". " << topic.title << " [" << topic.id << "]\n";
        auto it = party.preferences.find(topic.id);
        if (it == party.preferences.end()) {
            ss << "- No stated preference\n";
            continue;
        }
        const PreferenceProfile& p = it->second;
        auto describe = [&](const std::string& option_id) {
            const OptionItem* o = topic.find_option(option_id);
            std::string text = "(" + option_id + ") " + (o ? o->description : option_id);
            if (auto r = p.rationale.find(option_id); r != p.rationale.end() && !r->second.empty())
                text += ". " + r->second;
            return text;
        };
        for (std::size_t r = 0; r < p.ranking.size(); ++r) ss << "- " << ordinal(r) << " choice: " << describe(p.ranking[r]) << "\n";
        for (const auto& u : p.unacceptable) ss << "- Unacceptable: " << describe(u) << "\n";
    }
    return ss.str();
}

std::string persona_text(const ConflictMode& mode) {
    std::string d = render_mode_directive(mode);
    return d.empty() ? "No assigned conflict style; behave as you naturally would." : d;
}

TemplateVars agent_vars(const ParticipantAgent& agent, const ConversationContext& ctx, std::size_t memory_recent) {
    return {{"name", agent.display_name},
            {"persona", persona_text(agent.conflict_mode)},
            {"overall_context", render_overall_context(*ctx.scenario)},
            {"history", render_history(ctx)},
            {"memories", render_memories(agent.memory, memory_recent)},
            {"thoughts", render_thoughts(agent.previous_thoughts)},
            {"turn", std::to_string(ctx.turn_index)}};
}

}  // namespace

void remember(std::vector<MemoryItem>& memory, std::string text, MemoryKind kind) {
    int next = memory.empty() ? 1 : memory.back().index + 1;
    memory.push_back({next, std::move(text), kind});
}

std::string render_memories(const std::vector<MemoryItem>& memory, std::size_t recent) {
    std::size_t observations = 0;
    for (const auto& m : memory) observations += m.kind == MemoryKind::Observation;
    std::size_t skip = observations > recent ? observations - recent : 0;
    std::ostringstream ss;
    for (const auto& m : memory) {
        if (m.kind == MemoryKind::Observation && skip > 0) {
            --skip;
            continue;
        }
        ss << "MEM#" << m.index << ": " << m.text << "\n";
    }
    std::string out = ss.str();
    return out.empty() ? "(none)" : out;
}

std::string render_mode_directive(const ConflictMode& mode) {
    if (!mode.directive.empty()) return mode.directive;
    switch (mode.kind) {
        case ConflictKind::Competing: return kCompetingDirective;
        case ConflictKind::Avoiding: return kAvoidingDirective;
        case ConflictKind::Accommodating: return kAccommodatingDirective;
        case ConflictKind::General: break;
    }
    return "";
}

std::string render_thoughts(const std::vector<Thought>& thoughts) {
    if (thoughts.empty()) return "(none)";
    std::ostringstream ss;
    for (std::size_t i = 0; i < thoughts.size(); ++i)
        ss << (i + 1) << ". " << thoughts[i].content << " (persona " << thoughts[i].persona_level << ")\n";
    return ss.str();
}

ParticipantAgent make_participant(const Scenario& s, const Party& party, const PromptLibrary& prompts,
                                  std::optional<ConflictMode> mode) {
    ParticipantAgent agent;
    agent.party_id = party.id;
    agent.display_name = party.display_name.empty() ? party.id : party.display_name;
    agent.conflict_mode = mode.value_or(s.conflict_mode);

    std::string background = prompts.render("participant_background", {{"context", s.background},
                                                                        {"committee", render_committee(s)},
                                                                        {"issues", render_issues(s)},
                                                                        {"options", render_options(s)}});
    std::string opinions = render_opinions(s, party);
    std::string directive = render_mode_directive(agent.conflict_mode);
    std::string identity = prompts.render(
        "participant_identity",
        {{"name", agent.display_name},
         {"identity", party.identity},
         {"opinions", opinions},
         {"strategy", party.strategy_hint.value_or("Use your own judgement.")},
         {"mode_directive", directive.empty() ? "No assigned conflict style." : directive}});
    agent.identity_prompt = background + "\n" + identity;

    remember(agent.memory, s.background, MemoryKind::Background);
    for (const Topic& topic : s.topics) {
        auto it = party.preferences.find(topic.id);
        if (it != party.preferences.end())
            remember(agent.memory, render_preference_attitude(topic, it->second), MemoryKind::Preference);
    }
    return agent;
}

std::vector<ParticipantAgent> make_participants(const Scenario& s, const PromptLibrary& prompts,
                                                std::optional<ConflictMode> mode) {
    std::vector<ParticipantAgent> agents;
    agents.reserve(s.parties.size());
    for (const Party& p : s.parties) agents.push_back(make_participant(s, p, prompts, mode));
    return agents;
}

std::vector<Thought> generate_thoughts(const CallSite& site, const ParticipantAgent& agent,
                                       const ConversationContext& ctx, int n, std::size_t memory_recent) {
    TemplateVars vars = agent_vars(agent, ctx, memory_recent);
    vars["num_thoughts"] = std::to_string(n);
    std::string prompt = site.prompts->render("thought_gen", vars);
    auto reply = call_structured<ThoughtsReply>(site, CallTag::ThoughtGen, Shape::Thoughts, agent.identity_prompt, prompt);
    std::vector<Thought> out;
    if (!reply) return out;
    for (const ThoughtItem& item : reply->thoughts) {
        if (static_cast<int>(out.size()) >= n) {
            site.warn(agent.party_id + ": more than " + std::to_string(n) + " thoughts returned; extra dropped");
            break;
        }
        Thought t;
        t.content = item.content;
        t.persona_level = item.persona_level;
        t.stimuli = item.stimuli;
        t.strategy = item.strategy;
        t.persona_adjustment = item.persona_adjustment;
        out.push_back(std::move(t));
    }
    return out;
}

Thought rate_motivation(const CallSite& site, const ParticipantAgent& agent, Thought thought,
                        const ConversationContext& ctx, std::size_t memory_recent) {
    TemplateVars vars = agent_vars(agent, ctx, memory_recent);
    vars["thought"] = thought.content;
    std::string prompt = site.prompts->render("motivation_rate", vars);
    auto reply = call_structured<MotivationReply>(site, CallTag::MotivationRate, Shape::MotivationRating,
                                                  agent.identity_prompt, prompt, 0);
    double rating = 1.0;
    if (reply)
        rating = std::round(reply->rating * 10.0) / 10.0;
    else
        site.warn(agent.party_id + ": motivation rating unusable; defaulting to 1.0");
    thought.rating = std::clamp(rating, 1.0, 5.0);
    return thought;
}

std::optional<Utterance> articulate(const CallSite& site, const ParticipantAgent& agent, const Thought& thought,
                                    const ConversationContext& ctx, std::size_t memory_recent) {
    TemplateVars vars = agent_vars(agent, ctx, memory_recent);
    vars["thought"] = thought.content;
    std::string prompt = site.prompts->render("articulate", vars);
    auto reply = call_structured<ArticulationReply>(site, CallTag::ParticipantArticulate, Shape::Articulation,
                                                    agent.identity_prompt, prompt);
    if (!reply) return std::nullopt;
    if (reply->text.find_first_not_of(" \t\r\n") == std::string::npos) {
        site.warn(agent.party_id + ": empty articulation; turn aborted");
        return std::nullopt;
    }
    return Utterance{agent.party_id, reply->text};
}

}  // namespace negsim

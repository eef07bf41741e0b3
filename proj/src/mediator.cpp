#include "negsim/mediator.hpp"

#include <algorithm>
#include <cctype>

namespace negsim {

namespace {

TemplateVars mediator_vars(const MediatorAgent& m, const ConversationContext& ctx) {
    return {{"overall_context", render_overall_context(*ctx.scenario)},
            {"history", render_history(ctx)},
            {"memories", render_memories(m.memory)},
            {"thoughts", render_thoughts(m.previous_thoughts)},
            {"turn", std::to_string(ctx.turn_index)}};
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n\"'`.[]()");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n\"'`.[]()");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(MediatorKind kind) {
    switch (kind) {
        case MediatorKind::None: return "none";
        case MediatorKind::Generic: return "generic";
        case MediatorKind::SociallyIntelligent: break;
    }
    return "social";
}

MediatorKind mediator_kind_from_string(std::string_view text) {
    std::string t = lower(text);
    if (t == "none" || t == "off") return MediatorKind::None;
    if (t == "generic") return MediatorKind::Generic;
    if (t == "social" || t == "socially_intelligent" || t == "sociallyintelligent") return MediatorKind::SociallyIntelligent;
    throw ConfigError("unknown mediator kind '" + std::string(text) + "' (expected none, generic or social)");
}

MediatorAgent make_mediator(MediatorKind kind, const Scenario& s, const PromptLibrary& prompts,
                            double engage_threshold, int min_turn_gap) {
    if (engage_threshold < 1.0 || engage_threshold > 5.0)
        throw ConfigError("engage threshold must lie in [1.0, 5.0]");
    if (min_turn_gap < 0) throw ConfigError("min turn gap must be >= 0");
    MediatorAgent m;
    m.kind = kind;
    m.engage_threshold = engage_threshold;
    m.min_turn_gap = min_turn_gap;
    if (kind == MediatorKind::None) return m;
    std::string background = prompts.render("participant_background", {{"context", s.background},
                                                                        {"committee", render_committee(s)},
                                                                        {"issues", render_issues(s)},
                                                                        {"options", render_options(s)}});
    m.system_prompt = background + "\n" + prompts.render("mediator_general", {{"issues", render_issues(s)}});
    remember(m.memory, s.background, MemoryKind::Background);
    return m;
}

bool cadence_blocks(const MediatorAgent& m, int turn_index) {
    return m.last_spoke > 0 && (turn_index - 1 - m.last_spoke) < m.min_turn_gap;
}

InterventionDecision decide_intervention(const CallSite& site, const MediatorAgent& m, const ConversationContext& ctx) {
    InterventionDecision d;
    if (m.kind == MediatorKind::None || cadence_blocks(m, ctx.turn_index)) return d;
    d.consulted = true;
    TemplateVars vars = mediator_vars(m, ctx);
    if (m.kind == MediatorKind::Generic) {
        auto reply = call_structured<GenericDecisionReply>(site, CallTag::GenericWhen, Shape::GenericDecision,
                                                           m.system_prompt, site.prompts->render("generic_when", vars));
        if (!reply) {
            d.reasoning = "unusable judge reply";
            return d;
        }
        d.engage = reply->should_engage;
        d.reasoning = reply->reason;
        return d;
    }
    auto reply = call_structured<SocialDecisionReply>(site, CallTag::SocialWhen, Shape::SocialDecision,
                                                      m.system_prompt, site.prompts->render("social_when", vars));
    if (!reply) {
        d.reasoning = "unusable judge reply";
        return d;
    }
    d.rating = reply->rating;
    d.engage = reply->rating >= m.engage_threshold;
    d.reasoning = reply->reasoning;
    d.stimuli = reply->stimuli;
    d.surfaced_issues = reply->issues;
    return d;
}

std::vector<StrategyCandidate> generate_candidates(const CallSite& site, const MediatorAgent& m,
                                                   const ConversationContext& ctx, int k) {
    if (m.kind != MediatorKind::SociallyIntelligent)
        throw ConfigError("candidate strategies are only generated by the socially intelligent mediator");
    if (k < 1) throw ConfigError("candidate count must be positive");
    TemplateVars vars = mediator_vars(m, ctx);
    vars["num_thoughts"] = std::to_string(k);
    auto thoughts = call_structured<ThoughtsReply>(site, CallTag::SocialThoughts, Shape::Thoughts, m.system_prompt,
                                                   site.prompts->render("social_thoughts", vars));
    std::vector<StrategyCandidate> out;
    if (!thoughts) return out;
    std::size_t limit = std::min<std::size_t>(thoughts->thoughts.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < limit; ++i) {
        const ThoughtItem& item = thoughts->thoughts[i];
        TemplateVars eval_vars = vars;
        eval_vars["thought"] = item.content;
        auto eval = call_structured<CandidateEvalReply>(site, CallTag::SocialEval, Shape::CandidateEval,
                                                        m.system_prompt,
                                                        site.prompts->render("social_eval", eval_vars));
        if (!eval) continue;
        StrategyCandidate c;
        c.content = item.content;
        c.family = strategy_family_from_label(item.strategy);
        c.dimension_scores = eval->dims;
        c.overall = eval->rating;
        out.push_back(std::move(c));
    }
    if (out.size() < static_cast<std::size_t>(k))
        site.warn("mediator: " + std::to_string(out.size()) + " of " + std::to_string(k) +
                  " strategy candidates usable");
    return out;
}

std::size_t select_strategy(const std::vector<StrategyCandidate>& candidates) {
    if (candidates.empty()) throw EmptyCandidates();
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].overall > candidates[best].overall) best = i;
    return best;
}

std::optional<Utterance> compose_intervention(const CallSite& site, const MediatorAgent& m,
                                              const StrategyCandidate* chosen, const ConversationContext& ctx) {
    TemplateVars vars = mediator_vars(m, ctx);
    std::string text;
    if (m.kind == MediatorKind::SociallyIntelligent) {
        if (!chosen) throw ConfigError("socially intelligent intervention requires a chosen strategy");
        vars["thought"] = chosen->content;
        auto reply = call_structured<ArticulationReply>(site, CallTag::MediatorArticulate, Shape::Articulation,
                                                        m.system_prompt,
                                                        site.prompts->render("mediator_articulate", vars));
        if (!reply) return std::nullopt;
        text = reply->text;
    } else if (m.kind == MediatorKind::Generic) {
        auto reply = call_structured<MessageReply>(site, CallTag::GenericHow, Shape::Message, m.system_prompt,
                                                   site.prompts->render("generic_how", vars));
        if (!reply) return std::nullopt;
        text = reply->text;
    } else {
        return std::nullopt;
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        site.warn("mediator: empty intervention text; intervention abandoned");
        return std::nullopt;
    }
    return Utterance{std::string(kMediatorId), text};
}

std::optional<std::string> resolve_topic(const Scenario& s, std::string_view text) {
    std::string t = lower(trim(text));
    if (t.empty()) return std::nullopt;
    for (const Topic& topic : s.topics)
        if (lower(topic.id) == t || lower(topic.title) == t) return topic.id;
    // "Title [id]" as rendered in issue lists
    for (const Topic& topic : s.topics)
        if (t.find("[" + lower(topic.id) + "]") != std::string::npos) return topic.id;
    std::optional<std::string> hit;
    for (const Topic& topic : s.topics) {
        if (t.find(lower(topic.title)) != std::string::npos) {
            if (hit) return std::nullopt;
            hit = topic.id;
        }
    }
    return hit;
}

std::optional<std::string> ask_target_topic(const CallSite& site, const Scenario& s, const Utterance& speech,
                                            const ConversationContext& ctx) {
    TemplateVars vars{{"speech", speech.text}, {"topics", render_issues(s)}, {"history", render_history(ctx)}};
    auto reply = call_structured<TargetTopicReply>(site, CallTag::TargetTopic, Shape::TargetTopic, "",
                                                   site.prompts->render("target_topic", vars), 0);
    if (!reply) return std::nullopt;
    auto id = resolve_topic(s, reply->topic);
    if (!id) site.warn("target topic '" + reply->topic + "' matches no scenario topic");
    return id;
}

}  // namespace negsim

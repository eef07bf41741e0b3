#include "negsim/orchestrator.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>

namespace negsim {

using nlohmann::json;

void validate_run_config(const RunConfig& cfg) {
    if (cfg.runs_per_condition < 1) throw ConfigError("runs per condition must be >= 1");
    if (cfg.thoughts_per_agent < 1) throw ConfigError("thoughts per agent must be >= 1");
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (cfg.turn_budget && *cfg.turn_budget < 1) throw ConfigError("turn budget must be >= 1");
    if (cfg.engage_threshold < 1.0 || cfg.engage_threshold > 5.0)
        throw ConfigError("engage threshold must lie in [1.0, 5.0]");
    if (cfg.min_turn_gap < 0) throw ConfigError("min turn gap must be >= 0");
    if (cfg.strategy_candidates < 1) throw ConfigError("strategy candidates must be >= 1");
    if (cfg.stall_limit < 1) throw ConfigError("stall limit must be >= 1");
}

json run_config_to_json(const RunConfig& cfg) {
    json j{{"mediator", std::string(to_string(cfg.mediator_kind))},
           {"mode_override", cfg.mode_override ? json(std::string(to_string(*cfg.mode_override))) : json(nullptr)},
           {"turn_budget", cfg.turn_budget ? json(*cfg.turn_budget) : json(nullptr)},
           {"runs_per_condition", cfg.runs_per_condition},
           {"thoughts_per_agent", cfg.thoughts_per_agent},
           {"parallelism", cfg.parallelism},
           {"engage_threshold", cfg.engage_threshold},
           {"min_turn_gap", cfg.min_turn_gap},
           {"strategy_candidates", cfg.strategy_candidates},
           {"stall_limit", cfg.stall_limit},
           {"history_window", cfg.history_window},
           {"memory_recent", cfg.memory_recent},
           {"generation_temperature", cfg.generation_temperature},
           {"judge_temperature", cfg.judge_temperature},
           {"participant_backend", cfg.participant_backend},
           {"mediator_backend", cfg.mediator_backend},
           {"judge_backend", cfg.judge_backend},
           {"backends", cfg.backends}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    if (!j.is_object()) throw ConfigError("run configuration must be an object");
    try {
        if (auto it = j.find("mediator"); it != j.end()) cfg.mediator_kind = mediator_kind_from_string(it->get<std::string>());
        if (auto it = j.find("mode_override"); it != j.end() && !it->is_null())
            cfg.mode_override = conflict_kind_from_string(it->get<std::string>());
        if (auto it = j.find("turn_budget"); it != j.end() && !it->is_null()) cfg.turn_budget = it->get<int>();
        cfg.runs_per_condition = j.value("runs_per_condition", cfg.runs_per_condition);
        cfg.thoughts_per_agent = j.value("thoughts_per_agent", cfg.thoughts_per_agent);
        cfg.parallelism = j.value("parallelism", cfg.parallelism);
        cfg.engage_threshold = j.value("engage_threshold", cfg.engage_threshold);
        cfg.min_turn_gap = j.value("min_turn_gap", cfg.min_turn_gap);
        cfg.strategy_candidates = j.value("strategy_candidates", cfg.strategy_candidates);
        cfg.stall_limit = j.value("stall_limit", cfg.stall_limit);
        cfg.history_window = j.value("history_window", cfg.history_window);
        cfg.memory_recent = j.value("memory_recent", cfg.memory_recent);
        cfg.generation_temperature = j.value("generation_temperature", cfg.generation_temperature);
        cfg.judge_temperature = j.value("judge_temperature", cfg.judge_temperature);
        cfg.participant_backend = j.value("participant_backend", cfg.participant_backend);
        cfg.mediator_backend = j.value("mediator_backend", cfg.mediator_backend);
        cfg.judge_backend = j.value("judge_backend", cfg.judge_backend);
        cfg.backends = j.value("backends", json::object());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run configuration: ") + e.what());
    }
    validate_run_config(cfg);
    return cfg;
}

ConflictMode effective_mode(const Scenario& s, const RunConfig& cfg) {
    if (!cfg.mode_override || *cfg.mode_override == s.conflict_mode.kind) return s.conflict_mode;
    return ConflictMode{*cfg.mode_override, ""};
}

std::string condition_name(const Scenario& s, const RunConfig& cfg) {
    return std::string(to_string(effective_mode(s, cfg).kind)) + "-" + std::string(to_string(cfg.mediator_kind));
}

std::string make_run_id(const Scenario& s, const RunConfig& cfg, int k) {
    return s.id + "__" + std::string(to_string(effective_mode(s, cfg).kind)) + "__" +
           std::string(to_string(cfg.mediator_kind)) + "__run" + std::to_string(k);
}

int turn_budget(const Scenario& s, std::optional<int> override) {
    if (override) return *override;
    int proportional = 4 * static_cast<int>(s.topics.size()) * static_cast<int>(s.parties.size());
    return std::max(proportional, 20);
}

std::size_t select_speaker(const std::vector<SpeakerCandidate>& candidates) {
    if (candidates.empty()) throw NoThoughts();
    auto rating = [](const SpeakerCandidate& c) { return c.thought.rating.value_or(1.0); };
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& a = candidates[i];
        const auto& b = candidates[best];
        if (rating(a) != rating(b)) {
            if (rating(a) > rating(b)) best = i;
        } else if (a.silence != b.silence) {
            if (a.silence > b.silence) best = i;
        } else if (a.declaration_index < b.declaration_index) {
            best = i;
        }
    }
    return best;
}

namespace {

struct Sites {
    CallSite participant;
    CallSite rating;
    CallSite mediator;
    CallSite judge;
};

Sites make_sites(const RunEnvironment& env, const RunConfig& cfg) {
    Sites s;
    s.participant = {env.gateway, env.prompts, cfg.participant_backend, cfg.generation_temperature};
    s.rating = {env.gateway, env.prompts, cfg.participant_backend, cfg.judge_temperature};
    s.mediator = {env.gateway, env.prompts, cfg.mediator_backend, cfg.generation_temperature};
    s.judge = {env.gateway, env.prompts, cfg.judge_backend, cfg.judge_temperature};
    return s;
}

void check_agents(const Scenario& s, const std::vector<ParticipantAgent>& agents) {
    std::set<std::string> want, have;
    for (const auto& p : s.parties) want.insert(p.id);
    for (const auto& a : agents) {
        if (!have.insert(a.party_id).second) throw ConfigError("duplicate agent for party '" + a.party_id + "'");
    }
    if (want != have) throw ConfigError("agents do not match the scenario's parties");
}

// Thoughts of one agent, rated, best first (stable for equal ratings).
std::vector<Thought> think(const Sites& sites, const ParticipantAgent& agent, const ConversationContext& ctx,
                           const RunConfig& cfg) {
    std::vector<Thought> thoughts = generate_thoughts(sites.participant, agent, ctx, cfg.thoughts_per_agent,
                                                      cfg.memory_recent);
    for (auto& t : thoughts) t = rate_motivation(sites.rating, agent, std::move(t), ctx, cfg.memory_recent);
    return thoughts;
}

std::vector<std::vector<Thought>> think_all(const RunEnvironment& env, const Sites& sites,
                                            const std::vector<ParticipantAgent>& agents,
                                            const ConversationContext& ctx, const RunConfig& cfg) {
    std::vector<std::vector<Thought>> out(agents.size());
    std::size_t width = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.parallelism),
        static_cast<std::size_t>(std::max(1, env.gateway->max_parallelism(cfg.participant_backend))));
    if (width <= 1) {
        for (std::size_t i = 0; i < agents.size(); ++i) out[i] = think(sites, agents[i], ctx, cfg);
        return out;
    }
    for (std::size_t start = 0; start < agents.size(); start += width) {
        std::vector<std::future<std::vector<Thought>>> pending;
        std::size_t stop = std::min(agents.size(), start + width);
        for (std::size_t i = start; i < stop; ++i)
            pending.push_back(std::async(std::launch::async, [&, i] { return think(sites, agents[i], ctx, cfg); }));
        for (std::size_t i = start; i < stop; ++i) out[i] = pending[i - start].get();
    }
    return out;
}

}  // namespace

Transcript run_negotiation(const RunEnvironment& env, const Scenario& s, std::vector<ParticipantAgent> agents,
                           MediatorAgent mediator, const RunConfig& cfg, std::string run_id) {
    if (!env.gateway || !env.prompts) throw ConfigError("run environment needs a gateway and prompts");
    validate_run_config(cfg);
    check_agents(s, agents);
    // Declaration order drives tie-breaks and call order.
    std::stable_sort(agents.begin(), agents.end(), [&](const auto& a, const auto& b) {
        return s.party_index(a.party_id) < s.party_index(b.party_id);
    });
    for (const auto& id : {cfg.participant_backend, cfg.judge_backend})
        if (!env.gateway->has_backend(id)) throw ConfigError("backend '" + id + "' is not registered");
    if (mediator.kind != MediatorKind::None && !env.gateway->has_backend(cfg.mediator_backend))
        throw ConfigError("backend '" + cfg.mediator_backend + "' is not registered");

    Transcript tr;
    tr.run_id = std::move(run_id);
    tr.scenario_id = s.id;
    tr.condition = std::string(to_string(agents.empty() ? s.conflict_mode.kind : agents.front().conflict_mode.kind)) +
                   "-" + std::string(to_string(mediator.kind));
    tr.budget = turn_budget(s, cfg.turn_budget);
    RunConfig snapshot_cfg = cfg;
    snapshot_cfg.mediator_kind = mediator.kind;
    tr.config_snapshot = run_config_to_json(snapshot_cfg);
    tr.config_snapshot["engage_threshold"] = mediator.engage_threshold;
    tr.config_snapshot["min_turn_gap"] = mediator.min_turn_gap;
    tr.scenario = s;

    Sites sites = make_sites(env, cfg);
    Clock& clock = env.gateway->clock();
    const double t0 = clock.now();
    std::map<std::string, int> last_spoke;
    int stalls = 0;

    try {
        for (int index = 1; index <= tr.budget; ++index) {
            const double turn_start = clock.now();
            ConversationContext ctx{&s, &tr.turns, index, cfg.history_window};
            Turn turn;
            turn.index = index;

            if (mediator.kind != MediatorKind::None) {
                InterventionDecision decision = decide_intervention(sites.mediator, mediator, ctx);
                if (decision.consulted) turn.decision = decision;
                if (decision.engage) {
                    std::vector<StrategyCandidate> candidates;
                    std::optional<std::size_t> chosen;
                    std::optional<Utterance> speech;
                    if (mediator.kind == MediatorKind::SociallyIntelligent) {
                        candidates = generate_candidates(sites.mediator, mediator, ctx, cfg.strategy_candidates);
                        if (candidates.empty()) {
                            sites.mediator.warn("turn " + std::to_string(index) +
                                                ": no usable strategy candidates; intervention abandoned");
                        } else {
                            chosen = select_strategy(candidates);
                            speech = compose_intervention(sites.mediator, mediator, &candidates[*chosen], ctx);
                        }
                    } else {
                        speech = compose_intervention(sites.mediator, mediator, nullptr, ctx);
                    }
                    if (speech) {
                        turn.kind = TurnKind::Mediator;
                        turn.speaker = std::string(kMediatorId);
                        turn.utterance = speech->text;
                        turn.candidates = std::move(candidates);
                        turn.chosen_candidate = chosen;
                        turn.target_topic = ask_target_topic(sites.judge, s, *speech, ctx);
                        const double now = clock.now();
                        turn.timestamp = now - t0;
                        turn.decision_latency_s = now - turn_start;
                        mediator.previous_thoughts.clear();
                        for (const auto& c : turn.candidates) {
                            Thought t;
                            t.content = c.content;
                            mediator.previous_thoughts.push_back(std::move(t));
                        }
                        remember(mediator.memory, "CON#" + std::to_string(index) + " I said: " + turn.utterance,
                                 MemoryKind::Observation);
                        mediator.last_spoke = index;
                        tr.turns.push_back(std::move(turn));
                        stalls = 0;
                        continue;
                    }
                    sites.mediator.warn("turn " + std::to_string(index) + ": intervention abandoned; participants speak");
                }
            }

            std::vector<std::vector<Thought>> pools = think_all(env, sites, agents, ctx, cfg);
            for (auto& pool : pools)
                std::stable_sort(pool.begin(), pool.end(), [](const Thought& a, const Thought& b) {
                    return a.rating.value_or(1.0) > b.rating.value_or(1.0);
                });
            std::vector<std::size_t> head(agents.size(), 0);
            std::optional<std::size_t> winner;
            std::optional<Utterance> speech;
            while (true) {
                std::vector<SpeakerCandidate> cands;
                std::vector<std::size_t> owner;
                for (std::size_t i = 0; i < agents.size(); ++i) {
                    if (head[i] >= pools[i].size()) continue;
                    int spoke = last_spoke.count(agents[i].party_id) ? last_spoke[agents[i].party_id] : 0;
                    cands.push_back({agents[i].party_id, pools[i][head[i]], index - spoke, i});
                    owner.push_back(i);
                }
                if (cands.empty()) break;
                std::size_t a = owner[select_speaker(cands)];
                speech = articulate(sites.participant, agents[a], pools[a][head[a]], ctx, cfg.memory_recent);
                if (speech) {
                    winner = a;
                    break;
                }
                ++head[a];
            }

            const double now = clock.now();
            turn.timestamp = now - t0;
            turn.decision_latency_s = now - turn_start;
            if (winner) {
                const std::size_t a = *winner;
                turn.kind = TurnKind::Participant;
                turn.speaker = agents[a].party_id;
                turn.utterance = speech->text;
                turn.linked_thought = pools[a][head[a]];
                last_spoke[agents[a].party_id] = index;
                remember(agents[a].memory, "CON#" + std::to_string(index) + " I said: " + turn.utterance,
                         MemoryKind::Observation);
                stalls = 0;
            } else {
                turn.kind = TurnKind::Stall;
                ++stalls;
            }
            for (std::size_t i = 0; i < agents.size(); ++i) agents[i].previous_thoughts = pools[i];
            tr.turns.push_back(std::move(turn));
            if (stalls >= cfg.stall_limit) {
                tr.end.reason = "early_consensus";
                tr.end.detail = std::to_string(stalls) + " consecutive turns without speech";
                break;
            }
        }
    } catch (const GatewayError& e) {
        tr.end.reason = "truncated";
        tr.end.detail = e.what();
        env.gateway->diagnostics().warn(tr.run_id + ": run truncated: " + e.what());
    }
    return tr;
}

Transcript run_negotiation(const RunEnvironment& env, const Scenario& s, const RunConfig& cfg, std::string run_id) {
    if (!env.prompts) throw ConfigError("run environment needs prompts");
    ConflictMode mode = effective_mode(s, cfg);
    auto agents = make_participants(s, *env.prompts, mode);
    auto mediator = make_mediator(cfg.mediator_kind, s, *env.prompts, cfg.engage_threshold, cfg.min_turn_gap);
    return run_negotiation(env, s, std::move(agents), std::move(mediator), cfg, std::move(run_id));
}

std::vector<Transcript> run_batch(const RunEnvironment& env, const Scenario& s, const RunConfig& cfg,
                                  const std::function<void(const Transcript&)>& on_run) {
    validate_run_config(cfg);
    std::vector<Transcript> out;
    out.reserve(static_cast<std::size_t>(cfg.runs_per_condition));
    for (int k = 1; k <= cfg.runs_per_condition; ++k) {
        out.push_back(run_negotiation(env, s, cfg, make_run_id(s, cfg, k)));
        if (on_run) on_run(out.back());
    }
    return out;
}

}  // namespace negsim

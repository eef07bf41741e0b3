#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "negsim/orchestrator.hpp"
#include "testkit.hpp"

using namespace negsim;
using testkit::json;

namespace {

json one_thought(const std::string& content) {
    return {{"thoughts", {{{"content", content}, {"persona", 3}, {"stimuli", json::array()}}}}};
}

// Every participant always has one thought rated 3.0 and says "I speak."
std::string chatter() {
    return testkit::script_line("thought_gen", one_thought("say something"), -1, true) +
           testkit::script_line("motivation_rate", {{"rating", 3.0}}, -1, true) +
           testkit::script_line("articulate", {{"articulation", "I speak."}}, -1, true);
}

std::string social_mediator(double fallback_rating) {
    return testkit::script_line("social_when", {{"rating", fallback_rating}, {"should engage", fallback_rating >= 4}},
                                -1, true) +
           testkit::script_line("social_thoughts",
                                {{"thoughts", {{{"content", "summarize"}, {"persona", 3}, {"strategy", "facilitative"}}}}},
                                -1, true) +
           testkit::script_line("social_eval", {{"rating", 4.0}}, -1, true) +
           testkit::script_line("mediator_articulate", {{"articulation", "Let us recap."}}, -1, true) +
           testkit::script_line("target_topic", {{"topic", "t0"}}, -1, true);
}

RunConfig config(MediatorKind kind, int budget) {
    RunConfig cfg;
    cfg.mediator_kind = kind;
    cfg.turn_budget = budget;
    cfg.thoughts_per_agent = 1;
    cfg.runs_per_condition = 1;
    return cfg;
}

std::map<std::string, int> tag_counts(Gateway& gw) {
    std::map<std::string, int> out;
    for (const auto& rec : gw.drain_call_log()) ++out[rec.tag];
    return out;
}

SpeakerCandidate speaker(const std::string& id, double rating, int silence, std::size_t decl) {
    Thought t;
    t.content = id;
    t.rating = rating;
    return {id, t, silence, decl};
}

void check_transcript_invariants(const Transcript& tr) {
    ASSERT_LE(static_cast<int>(tr.turns.size()), tr.budget);
    if (tr.end.reason == "budget") {
        EXPECT_EQ(static_cast<int>(tr.turns.size()), tr.budget);
    } else {
        EXPECT_LT(static_cast<int>(tr.turns.size()), tr.budget);
    }
    for (std::size_t i = 0; i < tr.turns.size(); ++i) {
        const Turn& t = tr.turns[i];
        EXPECT_EQ(t.index, static_cast<int>(i) + 1);
        EXPECT_EQ(t.is_intervention(), t.speaker == kMediatorId);
        if (t.is_intervention()) {
            ASSERT_TRUE(t.decision);
            EXPECT_TRUE(t.decision->engage);
            if (i > 0) {
                EXPECT_FALSE(tr.turns[i - 1].is_intervention());
            }
        }
        if (i > 0) {
            EXPECT_GE(t.timestamp, tr.turns[i - 1].timestamp);
        }
        EXPECT_GE(t.decision_latency_s, 0.0);
    }
}

}  // namespace

TEST(Orchestrator, TurnBudget) {
    EXPECT_EQ(turn_budget(testkit::make_scenario(3, 5)), 60);
    EXPECT_EQ(turn_budget(testkit::make_scenario(2, 1)), 20);
    EXPECT_EQ(turn_budget(testkit::make_scenario(2, 1), 45), 45);
    std::mt19937 rng(5);
    for (int i = 0; i < 100; ++i) {
        int n = 2 + static_cast<int>(rng() % 8), m = 1 + static_cast<int>(rng() % 8);
        EXPECT_EQ(turn_budget(testkit::make_scenario(n, m)), std::max(4 * n * m, 20));
    }
}

TEST(Orchestrator, SelectSpeakerExamples) {
    std::vector<SpeakerCandidate> c{speaker("A", 4.2, 2, 0), speaker("B", 3.9, 9, 1), speaker("C", 4.2, 5, 2)};
    EXPECT_EQ(c[select_speaker(c)].party_id, "C");
    EXPECT_EQ(select_speaker({speaker("A", 5.0, 1, 0), speaker("B", 1.0, 1, 1)}), 0u);
    EXPECT_EQ(select_speaker({speaker("A", 4.0, 3, 1), speaker("B", 4.0, 3, 0)}), 1u);
    EXPECT_THROW(select_speaker({}), NoThoughts);
}

TEST(Orchestrator, SelectSpeakerPermutationProperty) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        int n = 1 + static_cast<int>(rng() % 6);
        std::vector<SpeakerCandidate> c;
        for (int i = 0; i < n; ++i)
            c.push_back(speaker("P" + std::to_string(i), 1.0 + static_cast<double>(rng() % 5),
                                static_cast<int>(rng() % 4), static_cast<std::size_t>(i)));
        // independent oracle: lexicographic max over (rating, silence, -declaration)
        auto key = [](const SpeakerCandidate& s) {
            return std::make_tuple(*s.thought.rating, s.silence, -static_cast<long>(s.declaration_index));
        };
        std::string expected =
            std::max_element(c.begin(), c.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); })->party_id;
        for (int p = 0; p < 4; ++p) {
            std::shuffle(c.begin(), c.end(), rng);
            EXPECT_EQ(c[select_speaker(c)].party_id, expected);
        }
    }
}

TEST(Orchestrator, NoMediatorRunIsAllParticipantTurns) {
    testkit::ScriptedEnv env;
    env.add_backend("default", chatter());
    Scenario s = testkit::make_scenario(2, 1);
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, s, config(MediatorKind::None, 20), "r");
    ASSERT_EQ(tr.turns.size(), 20u);
    for (const Turn& t : tr.turns) {
        EXPECT_EQ(t.kind, TurnKind::Participant);
        EXPECT_FALSE(t.decision);
        ASSERT_TRUE(t.linked_thought);
        EXPECT_DOUBLE_EQ(*t.linked_thought->rating, 3.0);
    }
    EXPECT_EQ(tr.end.reason, "budget");
    EXPECT_EQ(tr.condition, "general-none");
    // equal ratings: the party silent longest speaks, so speakers alternate
    for (std::size_t i = 0; i < tr.turns.size(); ++i) EXPECT_EQ(tr.turns[i].speaker, i % 2 ? "p1" : "p0");
}

TEST(Orchestrator, MediatorEngagementSkipsParticipants) {
    testkit::ScriptedEnv env;
    std::string script = chatter() + social_mediator(1.0);
    for (int i = 0; i < 4; ++i) script += testkit::script_line("social_when", {{"rating", 2.0}}, i);
    script += testkit::script_line("social_when", {{"rating", 4.5}}, 4);
    env.add_backend("default", script);
    Scenario s = testkit::make_scenario(3, 1);
    RunConfig cfg = config(MediatorKind::SociallyIntelligent, 20);
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, s, cfg, "r");
    ASSERT_EQ(tr.turns.size(), 20u);
    const Turn& t5 = tr.turns[4];
    EXPECT_EQ(t5.speaker, "mediator");
    EXPECT_EQ(t5.utterance, "Let us recap.");
    EXPECT_EQ(t5.target_topic, "t0");
    ASSERT_EQ(t5.candidates.size(), 1u);
    EXPECT_EQ(t5.chosen_candidate, 0u);
    EXPECT_FALSE(t5.linked_thought);
    int interventions = 0;
    for (const Turn& t : tr.turns) interventions += t.is_intervention();
    EXPECT_EQ(interventions, 1);
    auto counts = tag_counts(env.gateway);
    // 19 participant turns, 3 agents each; none on the intervention turn
    EXPECT_EQ(counts["thought_gen"], 19 * 3);
    EXPECT_EQ(counts["articulate"], 19);
    // cadence: turns 6..9 are gated without a call
    EXPECT_EQ(counts["social_when"], 20 - 4);
    check_transcript_invariants(tr);
}

TEST(Orchestrator, BelowThresholdNeverGeneratesCandidates) {
    testkit::ScriptedEnv env;
    env.add_backend("default", chatter() + social_mediator(3.9));
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, testkit::make_scenario(2, 2),
                                    config(MediatorKind::SociallyIntelligent, 20), "r");
    EXPECT_EQ(tr.turns.size(), 20u);
    auto counts = tag_counts(env.gateway);
    EXPECT_EQ(counts["social_when"], 20);
    EXPECT_EQ(counts.count("social_thoughts"), 0u);
    EXPECT_EQ(counts.count("social_eval"), 0u);
    for (const Turn& t : tr.turns) {
        ASSERT_TRUE(t.decision);
        EXPECT_FALSE(t.decision->engage);
    }
}

TEST(Orchestrator, GenericMediatorCadence) {
    testkit::ScriptedEnv env;
    env.add_backend("default", chatter() +
                                   testkit::script_line("generic_when", {{"should engage", true}, {"reason", "r"}}, -1, true) +
                                   testkit::script_line("generic_how", {{"message", "Shall we move on?"}}, -1, true) +
                                   testkit::script_line("target_topic", {{"topic", "nothing"}}, -1, true));
    RunConfig cfg = config(MediatorKind::Generic, 20);
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, testkit::make_scenario(2, 1), cfg, "r");
    std::vector<int> at;
    for (const Turn& t : tr.turns)
        if (t.is_intervention()) {
            at.push_back(t.index);
            EXPECT_TRUE(t.candidates.empty());
            EXPECT_FALSE(t.target_topic);
        }
    EXPECT_EQ(at, (std::vector<int>{1, 6, 11, 16}));
    check_transcript_invariants(tr);
}

TEST(Orchestrator, ArticulationFailureFallsThrough) {
    testkit::ScriptedEnv env;
    env.add_backend("default", chatter() + social_mediator(1.0) +
                                   testkit::script_line("social_when", {{"rating", 5.0}}, 0) +
                                   testkit::script_raw("mediator_articulate", "no", false) +
                                   testkit::script_raw("mediator_articulate", "still no", false));
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, testkit::make_scenario(2, 1),
                                    config(MediatorKind::SociallyIntelligent, 20), "r");
    ASSERT_EQ(tr.turns.size(), 20u);
    EXPECT_EQ(tr.turns[0].kind, TurnKind::Participant);
    ASSERT_TRUE(tr.turns[0].decision);
    EXPECT_TRUE(tr.turns[0].decision->engage);
    for (const Turn& t : tr.turns) EXPECT_FALSE(t.is_intervention());
}

TEST(Orchestrator, ParticipantArticulationFailureUsesNextBestThought) {
    testkit::ScriptedEnv env;
    std::string script = chatter() + testkit::script_raw("articulate", "", false) +
                         testkit::script_raw("articulate", "", false);
    env.add_backend("default", script);
    Scenario s = testkit::make_scenario(2, 1);
    RunConfig cfg = config(MediatorKind::None, 20);
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, s, cfg, "r");
    ASSERT_EQ(tr.turns.size(), 20u);
    // p0 would have spoken first; its only thought failed, so p1 speaks
    EXPECT_EQ(tr.turns[0].speaker, "p1");
}

TEST(Orchestrator, StallsEndRunEarly) {
    testkit::ScriptedEnv env;
    env.add_backend("default", testkit::script_line("thought_gen", {{"thoughts", json::array()}}, -1, true));
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, testkit::make_scenario(3, 1),
                                    config(MediatorKind::None, 20), "r");
    ASSERT_EQ(tr.turns.size(), 3u);
    for (const Turn& t : tr.turns) {
        EXPECT_EQ(t.kind, TurnKind::Stall);
        EXPECT_TRUE(t.utterance.empty());
    }
    EXPECT_EQ(tr.end.reason, "early_consensus");
}

TEST(Orchestrator, BackendFailureTruncates) {
    testkit::ScriptedEnv env;
    std::string script = chatter();
    for (int i = 0; i < 6; ++i) script += testkit::script_line("thought_gen", one_thought("x"), i);
    script += testkit::script_error("thought_gen", "fatal");
    env.add_backend("default", script);
    Transcript tr = run_negotiation({&env.gateway, &env.prompts}, testkit::make_scenario(2, 1),
                                    config(MediatorKind::None, 20), "r");
    EXPECT_EQ(tr.turns.size(), 3u);
    EXPECT_EQ(tr.end.reason, "truncated");
    EXPECT_TRUE(tr.truncated());
    check_transcript_invariants(tr);
}

TEST(Orchestrator, BatchContinuesPastTruncatedRun) {
    testkit::ScriptedEnv env;
    // 2 parties x 20 turns = 40 thought calls per run; the 6th call of run 3 fails
    std::string script = chatter();
    for (int i = 0; i < 85; ++i) script += testkit::script_line("thought_gen", one_thought("x"), i);
    script += json{{"tag", "thought_gen"}, {"seq", 85}, {"error", "fatal"}}.dump() + "\n";
    env.add_backend("default", script);
    RunConfig cfg = config(MediatorKind::None, 20);
    cfg.runs_per_condition = 5;
    int seen = 0;
    auto batch = run_batch({&env.gateway, &env.prompts}, testkit::make_scenario(2, 1), cfg,
                           [&](const Transcript&) { ++seen; });
    ASSERT_EQ(batch.size(), 5u);
    EXPECT_EQ(seen, 5);
    std::set<std::string> ids;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        ids.insert(batch[k].run_id);
        EXPECT_EQ(batch[k].truncated(), k == 2) << k;
    }
    EXPECT_EQ(ids.size(), 5u);
}

TEST(Orchestrator, RejectsMismatchedAgents) {
    testkit::ScriptedEnv env;
    env.add_backend("default", chatter());
    Scenario s = testkit::make_scenario(3, 1);
    auto agents = make_participants(s, env.prompts);
    agents.pop_back();
    auto m = make_mediator(MediatorKind::None, s, env.prompts);
    EXPECT_THROW(run_negotiation({&env.gateway, &env.prompts}, s, agents, m, config(MediatorKind::None, 20), "r"),
                 ConfigError);
    RunConfig cfg = config(MediatorKind::None, 20);
    cfg.judge_backend = "absent";
    EXPECT_THROW(run_negotiation({&env.gateway, &env.prompts}, s, cfg, "r"), ConfigError);
    cfg = config(MediatorKind::None, 20);
    cfg.runs_per_condition = 0;
    EXPECT_THROW(run_batch({&env.gateway, &env.prompts}, s, cfg), ConfigError);
}

TEST(Orchestrator, ReplayDeterminism) {
    Scenario s = testkit::make_scenario(3, 2);
    std::string script = chatter() + social_mediator(1.0);
    for (int i = 0; i < 24; ++i)
        script += testkit::script_line("social_when", {{"rating", (i * 7) % 5 + 1.0}}, i, false, 0.5 + i % 3);
    for (int i = 0; i < 80; ++i)
        script += testkit::script_line("motivation_rate", {{"rating", 1.0 + (i * 13) % 40 / 10.0}}, i, false, 0.25);
    std::vector<std::string> out;
    for (int rep = 0; rep < 3; ++rep) {
        testkit::ScriptedEnv env;
        env.add_backend("default", script);
        Transcript tr = run_negotiation({&env.gateway, &env.prompts}, s, config(MediatorKind::SociallyIntelligent, 24), "r");
        check_transcript_invariants(tr);
        out.push_back(serialize_transcript(tr));
    }
    EXPECT_EQ(out[0], out[1]);
    EXPECT_EQ(out[1], out[2]);
}

TEST(Orchestrator, RandomizedRunInvariants) {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        std::string script = chatter() + social_mediator(1.0) +
                             testkit::script_line("generic_when", {{"should engage", false}}, -1, true) +
                             testkit::script_line("generic_how", {{"message", "Let us move on."}}, -1, true);
        for (int i = 0; i < 40; ++i) {
            script += testkit::script_line("social_when", {{"rating", 1.0 + static_cast<double>(rng() % 41) / 10.0}}, i);
            script += testkit::script_line("generic_when", {{"should engage", rng() % 3 == 0}}, i);
            script += testkit::script_line("motivation_rate", {{"rating", 1.0 + static_cast<double>(rng() % 5)}}, i,
                                           false, static_cast<double>(rng() % 3));
        }
        testkit::ScriptedEnv env;
        env.add_backend("default", script);
        const MediatorKind kinds[] = {MediatorKind::None, MediatorKind::Generic, MediatorKind::SociallyIntelligent};
        RunConfig cfg = config(kinds[trial % 3], 20 + static_cast<int>(rng() % 10));
        cfg.min_turn_gap = 1 + static_cast<int>(rng() % 4);
        Transcript tr = run_negotiation({&env.gateway, &env.prompts}, testkit::make_scenario(2 + trial % 3, 1 + trial % 2),
                                        cfg, "r");
        check_transcript_invariants(tr);
        if (cfg.mediator_kind == MediatorKind::None) {
            for (const Turn& t : tr.turns) EXPECT_FALSE(t.is_intervention());
        }
        int last = -1000;
        for (const Turn& t : tr.turns)
            if (t.is_intervention()) {
                EXPECT_GT(t.index - last - 1, cfg.min_turn_gap - 1);
                last = t.index;
            }
    }
}

TEST(Orchestrator, RunConfigJsonRoundTrip) {
    RunConfig cfg;
    cfg.mediator_kind = MediatorKind::Generic;
    cfg.mode_override = ConflictKind::Avoiding;
    cfg.turn_budget = 33;
    cfg.engage_threshold = 3.5;
    RunConfig back = run_config_from_json(run_config_to_json(cfg));
    EXPECT_EQ(run_config_to_json(back), run_config_to_json(cfg));
    EXPECT_THROW(run_config_from_json(json{{"runs_per_condition", 0}}), ConfigError);
    EXPECT_THROW(run_config_from_json(json{{"mediator", "wizard"}}), ConfigError);
    Scenario s = testkit::make_scenario(2, 1);
    EXPECT_EQ(condition_name(s, cfg), "avoiding-generic");
}

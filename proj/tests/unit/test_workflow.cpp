#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "negsim/error.hpp"
#include "negsim/workflow.hpp"
#include "testkit.hpp"

using namespace negsim;
using namespace testkit;
namespace fs = std::filesystem;

namespace {

fs::path golden_dir() { return fixture_dir() / "golden"; }

SessionConfig golden_config() {
    return session_config_from_json(json::parse(read_text(golden_dir() / "golden.json")), golden_dir());
}

struct GoldenRun {
    fs::path transcript;
    fs::path series;
    fs::path report;
    fs::path cache;
    EvaluateOutcome eval;
};

GoldenRun run_golden(const fs::path& out) {
    SessionConfig cfg = golden_config();
    RunOutcome run = run_to_files(cfg, golden_dir() / "golden.scenario", out);
    EXPECT_EQ(run.transcripts.size(), 1u);
    GoldenRun g;
    g.transcript = run.transcripts.at(0);
    g.eval = evaluate_files(cfg, {g.transcript});
    fs::path base = g.transcript.parent_path() / g.transcript.stem();
    g.series = base.string() + ".series.json";
    g.report = base.string() + ".report.json";
    g.cache = base.string() + ".judgments.jsonl";
    return g;
}

}  // namespace

TEST(SessionConfig, ResolvesScriptsAgainstBaseDir) {
    SessionConfig cfg = golden_config();
    ASSERT_EQ(cfg.backends.size(), 2u);
    EXPECT_EQ(cfg.backends[0].script_path, golden_dir() / "run.script");
    EXPECT_EQ(cfg.backends[1].id, "judge");
    EXPECT_EQ(cfg.run.judge_backend, "judge");
    EXPECT_EQ(cfg.run.turn_budget, 24);
    EXPECT_EQ(cfg.run.min_turn_gap, 4);
}

TEST(SessionConfig, RejectsBadValues) {
    EXPECT_THROW(session_config_from_json(json::array()), ConfigError);
    EXPECT_THROW(session_config_from_json(json{{"consensus", {{"variant", "triple"}}}}), ConfigError);
    EXPECT_THROW(session_config_from_json(json{{"metrics", {{"me_windowing", "sometimes"}}}}), ConfigError);
    EXPECT_THROW(session_config_from_json(json{{"backends", {{{"id", "x"}, {"kind", "carrier_pigeon"}}}}}),
                 ConfigError);
    EXPECT_THROW(session_config_from_json(json{{"backends", json::object()}}), ConfigError);
}

TEST(SessionConfig, EmptyDocumentGivesDefaults) {
    SessionConfig cfg = session_config_from_json(json::object());
    EXPECT_TRUE(cfg.backends.empty());
    EXPECT_EQ(cfg.metrics.cc_window, 10);
    EXPECT_DOUBLE_EQ(cfg.metrics.tau, 0.1);
    EXPECT_EQ(cfg.metrics.me_window, 5);
}

TEST(BackendSnapshot, ScriptedRecordsBasenameAndDigest) {
    fs::path dir = temp_dir("snapshot");
    write_text(dir / "a.script", script_line("articulate", json{{"articulation", "x"}}));
    BackendSpec spec;
    spec.id = "default";
    spec.script_path = dir / "a.script";
    json a = backend_snapshot(spec);
    EXPECT_EQ(a["script"], "a.script");
    EXPECT_EQ(a["kind"], "scripted");
    ASSERT_EQ(a["digest"].get<std::string>().size(), 16u);

    write_text(dir / "a.script", script_line("articulate", json{{"articulation", "y"}}));
    EXPECT_NE(backend_snapshot(spec)["digest"], a["digest"]);
}

TEST(Workflow, MissingInputsFail) {
    SessionConfig cfg = golden_config();
    fs::path out = temp_dir("missing");
    EXPECT_THROW(run_to_files(cfg, out / "nope.scenario", out), IoError);
    EXPECT_THROW(run_to_files(SessionConfig{}, golden_dir() / "golden.scenario", out), ConfigError);
    EXPECT_THROW(evaluate_files(cfg, {}), EmptyInputError);
    EXPECT_THROW(evaluate_files(cfg, {out / "nope.transcript"}), IoError);
}

TEST(Golden, RunAndEvaluateMatchStoredOutputs) {
    fs::path out = temp_dir("golden");
    GoldenRun g = run_golden(out);
    const fs::path expected = golden_dir() / "expected";
    const char* update = std::getenv("NEGSIM_UPDATE_GOLDEN");
    for (const fs::path& p : {g.transcript, g.series, g.report}) {
        if (update && std::string(update) == "1") {
            fs::copy_file(p, expected / p.filename(), fs::copy_options::overwrite_existing);
            continue;
        }
        EXPECT_EQ(read_text(p), read_text(expected / p.filename())) << p.filename();
    }
}

TEST(Golden, OutputsAreByteIdenticalAcrossRuns) {
    GoldenRun a = run_golden(temp_dir("golden_a"));
    GoldenRun b = run_golden(temp_dir("golden_b"));
    EXPECT_EQ(read_text(a.transcript), read_text(b.transcript));
    EXPECT_EQ(read_text(a.series), read_text(b.series));
    EXPECT_EQ(read_text(a.report), read_text(b.report));
    EXPECT_EQ(read_text(a.cache), read_text(b.cache));
    fs::path calls_a = a.transcript.parent_path() / (a.transcript.stem().string() + ".calls.jsonl");
    fs::path calls_b = b.transcript.parent_path() / (b.transcript.stem().string() + ".calls.jsonl");
    EXPECT_EQ(read_text(calls_a), read_text(calls_b));
}

TEST(Golden, ReportShowsTheScheduledDynamics) {
    GoldenRun g = run_golden(temp_dir("golden_dyn"));
    MetricsReport r = metrics_report_from_json(json::parse(read_text(g.report)));
    EXPECT_EQ(r.turns, 24);
    ASSERT_EQ(r.interventions.size(), 1u);
    EXPECT_EQ(r.interventions[0].turn, 14);
    EXPECT_EQ(r.interventions[0].target_topic, "beds");
    ASSERT_TRUE(r.interventions[0].me.has_value());
    ASSERT_TRUE(r.interventions[0].mi_mean.has_value());
    EXPECT_DOUBLE_EQ(*r.interventions[0].mi_mean, 4.0);
    ASSERT_FALSE(r.drops.empty());
    ASSERT_TRUE(r.drops[0].latency_turns.has_value());
    EXPECT_EQ(*r.drops[0].latency_turns, 14 - r.drops[0].trigger_turn);
}

TEST(Golden, ReplayFromCacheMakesNoCallsAndReproducesReport) {
    fs::path out = temp_dir("golden_replay");
    GoldenRun g = run_golden(out);
    EXPECT_GT(g.eval.gateway_calls, 0u);
    const std::string report = read_text(g.report);
    const std::string series = read_text(g.series);

    fs::path replay = out / "replay";
    fs::create_directories(replay);
    EvaluateOutcome again = evaluate_files(SessionConfig{}, {g.transcript}, replay, g.cache);
    EXPECT_EQ(again.gateway_calls, 0u);
    EXPECT_EQ(read_text(replay / g.report.filename()), report);
    EXPECT_EQ(read_text(replay / g.series.filename()), series);
}

TEST(Golden, ReplayWithEmptyCacheFails) {
    fs::path out = temp_dir("golden_nocache");
    GoldenRun g = run_golden(out);
    EXPECT_THROW(evaluate_files(SessionConfig{}, {g.transcript}, out / "x", out / "empty.jsonl"), Error);
}

TEST(Reports, CollectSummarizeAndRender) {
    fs::path out = temp_dir("golden_reports");
    run_golden(out);
    std::vector<MetricsReport> reports = collect_reports({out});
    ASSERT_EQ(reports.size(), 1u);
    auto rows = summarize(reports);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].scenario, "golden_garden");
    EXPECT_EQ(rows[0].mode, "general");
    EXPECT_EQ(rows[0].mediator, "social");
    EXPECT_EQ(rows[0].summary.runs, 1u);
    std::string table = render_summary_table(rows);
    EXPECT_EQ(table.rfind("scenario\tmode\tmediator\truns\tCC%", 0), 0u);
    EXPECT_NE(table.find("golden_garden\tgeneral\tsocial\t1\t"), std::string::npos);

    EXPECT_THROW(summarize({}), EmptyInputError);
    EXPECT_THROW(collect_reports({out / "absent"}), IoError);
    EXPECT_TRUE(collect_reports({temp_dir("golden_reports_empty")}).empty());
}

TEST(Reports, PlotDataHasOneRowPerTurnAndLabel) {
    GoldenRun g = run_golden(temp_dir("golden_plot"));
    std::string table = render_plot_data(json::parse(read_text(g.series)));
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < table.size()) {
        std::size_t nl = table.find('\n', pos);
        lines.push_back(table.substr(pos, nl - pos));
        pos = nl + 1;
    }
    ASSERT_FALSE(lines.empty());
    EXPECT_EQ(lines[0], "turn\tseries\tvalue\tintervention");
    // turns 0..24, labels beds, water, OVERALL
    EXPECT_EQ(lines.size(), 1u + 25u * 3u);
    EXPECT_EQ(lines[1].rfind("0\tbeds\t", 0), 0u);
    int flagged = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) flagged += lines[i].back() == '1';
    EXPECT_EQ(flagged, 3);

    EXPECT_THROW(render_plot_data(json{{"g", {0.1, 0.2}}, {"g_topic", {{"beds", {0.1}}}}}), ParseError);
}

TEST(Reports, ViolationListing) {
    EXPECT_EQ(render_violations({}), "");
}

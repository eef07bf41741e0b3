#pragma once

// File-level commands shared by the C API and the command-line tool.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "negsim/consensus.hpp"
#include "negsim/gateway.hpp"
#include "negsim/metrics.hpp"
#include "negsim/orchestrator.hpp"

namespace negsim {

/// Everything a command needs besides its file arguments. Parsed from a JSON
/// document with optional "run", "backends", "metrics", "consensus" and
/// "prompt_dir" members.
struct SessionConfig {
    RunConfig run;
    std::vector<BackendSpec> backends;
    MetricsOptions metrics;
    ConsensusOptions consensus;
    std::optional<std::filesystem::path> prompt_dir;
};

SessionConfig session_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
BackendSpec backend_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Descriptive backend record for transcript headers: script basename and
/// content digest for scripted backends, endpoint and model otherwise.
nlohmann::json backend_snapshot(const BackendSpec& spec);

/// Gateway with every backend registered. Uses a virtual clock when all
/// backends are scripted so timestamps are reproducible.
std::unique_ptr<Gateway> make_gateway(const std::vector<BackendSpec>& specs);

PromptLibrary load_prompts(const SessionConfig& cfg);

struct RunOutcome {
    std::vector<std::filesystem::path> transcripts;
    std::vector<std::string> summaries;  // one line per run
    std::vector<std::string> warnings;
    int truncated = 0;
};

/// Writes {out}/{scenario}/{condition}/{run_id}.transcript and .calls.jsonl.
RunOutcome run_to_files(const SessionConfig& cfg, const std::filesystem::path& scenario_path,
                        const std::filesystem::path& out_dir);

struct EvaluateOutcome {
    std::vector<MetricsReport> reports;
    std::vector<std::filesystem::path> written;
    std::vector<std::string> warnings;
    std::uint64_t gateway_calls = 0;
};

/// Tracks consensus and computes metrics for each transcript. Writes
/// {run}.report.json, {run}.series.json and the judgment cache (default
/// {run}.judgments.jsonl) into `out_dir`, or next to the transcript when
/// empty. Judgments already in the cache are never re-requested; when the
/// judge backend is not configured every judgment must be cached.
EvaluateOutcome evaluate_files(const SessionConfig& cfg, const std::vector<std::filesystem::path>& transcripts,
                               const std::filesystem::path& out_dir = {},
                               const std::optional<std::filesystem::path>& cache_path = std::nullopt);

/// Collects *.report.json files (directories are searched recursively).
std::vector<MetricsReport> collect_reports(const std::vector<std::filesystem::path>& paths);

struct SummaryRow {
    std::string scenario;
    std::string mode;
    std::string mediator;
    BatchSummary summary;
};

/// One row per (scenario, mode, mediator), sorted by key. Throws
/// EmptyInputError "EmptyBatch".
std::vector<SummaryRow> summarize(const std::vector<MetricsReport>& reports);

/// Tab-separated table; percentages for CC, TLE and ME.
std::string render_summary_table(const std::vector<SummaryRow>& rows);

/// Flat (turn, series, value, intervention) table from a series document:
/// one row per turn and label, labels being the topic ids then OVERALL.
std::string render_plot_data(const nlohmann::json& series);

/// Violations as a human-readable listing; empty when clean.
std::string render_violations(const std::vector<Violation>& violations);

}  // namespace negsim

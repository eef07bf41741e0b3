#pragma once

// Run-level metrics (consensus change, topic efficiency, response latency,
// mediator effectiveness and intelligence), batch aggregation and rank
// correlation.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "negsim/consensus.hpp"

namespace negsim {

// ---------------------------------------------------------------------------
// Window arithmetic. `values` holds turns 1..T (no baseline).

/// Mean over the last w' values minus mean over the first w', with
/// w' = min(w, floor(T/2)). Throws DomainError "EmptySeries" when T < 2.
double window_change(std::span<const double> values, int w = 10);

/// Uses g over turns 1..T of `series`.
double consensus_change(const ConsensusSeries& series, int w = 10);

struct TopicEfficiency {
    std::string topic;
    double change = 0.0;  // window_change of g_topic
    int mentions = 0;
    double value = 0.0;   // change / mentions, 0 when never discussed
    bool never_discussed = false;
};

/// Throws DomainError "UnknownTopic".
TopicEfficiency topic_efficiency(const ConsensusSeries& series, std::string_view topic, int w = 10);

// ---------------------------------------------------------------------------
// Drop events and response latency

struct DropEvent {
    int start_turn = 0;
    int trigger_turn = 0;
    double magnitude = 0.0;
    std::optional<int> latency_turns;  // nullopt = never answered
    std::optional<double> latency_s;

    bool operator==(const DropEvent&) const = default;
};

/// Tolerance below which a drop is not "more than" tau.
inline constexpr double kDropEpsilon = 1e-12;

/// Greedy earliest-start scan: an event starts at t when some k in [1, W]
/// has values[t] - values[t+k] > tau (smallest such k is the trigger); the
/// next candidate start is trigger + 1. Turn numbers are `first_turn + i`.
std::vector<DropEvent> detect_drop_events(std::span<const double> values, double tau = 0.1, int W = 10,
                                          int first_turn = 1);

/// Overall series, turns 1..T.
std::vector<DropEvent> detect_drop_events(const ConsensusSeries& series, double tau = 0.1, int W = 10);

/// Fills latencies: turns until the first mediator turn after the trigger,
/// and the timestamp difference between those two turns.
std::vector<DropEvent> response_latency(std::vector<DropEvent> events, const Transcript& tr);

// ---------------------------------------------------------------------------
// Slopes and intervention metrics

/// Ordinary least squares slope. Throws DomainError "DegenerateWindow" with
/// fewer than two distinct x.
double fit_slope(std::span<const std::pair<double, double>> points);

class NotAnIntervention : public DomainError {
public:
    explicit NotAnIntervention(int turn)
        : DomainError("NotAnIntervention: turn " + std::to_string(turn) + " is not a mediator turn") {}
};

enum class MeWindowing { MentionTurns, RawTurns };

/// Post-window slope minus pre-window slope of g_topic around `turn`;
/// nullopt when either window has fewer than two points.
std::optional<double> mediator_effectiveness(const ConsensusSeries& series, const Transcript& tr, int turn,
                                             std::string_view topic, int window = 5,
                                             MeWindowing windowing = MeWindowing::MentionTurns);

/// Mean over applicable dimensions (score != -1); nullopt when none are.
std::optional<double> mi_mean(const std::array<int, 4>& scores);

/// Topic whose g_topic changed most (absolute) over the `lookback` turns
/// before `turn`; earliest topic on ties.
std::string fallback_target_topic(const ConsensusSeries& series, int turn, int lookback = 5);

struct InterventionMetrics {
    int turn = 0;
    std::string target_topic;
    bool target_from_fallback = false;
    std::optional<double> me;
    std::array<int, 4> mi{-1, -1, -1, -1};
    std::optional<double> mi_mean;
};

struct MetricsOptions {
    int cc_window = 10;
    double tau = 0.1;
    int drop_window = 10;
    int me_window = 5;
    MeWindowing me_windowing = MeWindowing::MentionTurns;
};

struct MetricsReport {
    std::string run_id;
    std::string scenario_id;
    std::string mode;
    std::string mediator;
    std::string end_reason;
    int turns = 0;
    double cc = 0.0;
    std::vector<TopicEfficiency> tle;
    double tle_mean = 0.0;
    std::vector<DropEvent> drops;
    std::optional<double> rl_turns_mean;  // over finite latencies
    std::optional<double> rl_s_mean;
    int rl_infinite = 0;
    std::vector<InterventionMetrics> interventions;
};

/// Full metric suite for one tracked transcript. MI judgments come from
/// `judge` (one per intervention).
MetricsReport compute_metrics(const Transcript& tr, const ConsensusSeries& series, JudgmentSource& judge,
                              const MetricsOptions& options = {});

nlohmann::json metrics_report_to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
std::string serialize_metrics_report(const MetricsReport& r);

nlohmann::json series_to_json(const ConsensusSeries& s, const Transcript& tr);

// ---------------------------------------------------------------------------
// Aggregation

struct Stat {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 when n < 2
};

/// nullopt-free mean/sd of `xs`; n = 0 gives mean 0.
Stat describe(std::span<const double> xs);

struct BatchSummary {
    std::size_t runs = 0;
    Stat cc;
    Stat tle;
    Stat rl_turns;  // finite latencies pooled over runs
    Stat rl_s;
    int rl_infinite = 0;
    Stat me;        // defined interventions only
    Stat mi;        // defined interventions only
    Stat interventions;
};

/// Throws EmptyInputError "EmptyBatch".
BatchSummary aggregate_batch(std::span<const MetricsReport> reports);

struct SpearmanResult {
    double rho = 0.0;
    double p = 1.0;
};

/// Average ranks for ties.
std::vector<double> average_ranks(std::span<const double> xs);

/// rho as Pearson correlation of average ranks; p from the Student-t
/// approximation with n-2 degrees of freedom. Throws DomainError
/// "LengthMismatch", "TooFewPoints" (n < 3) or "ConstantInput".
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

}  // namespace negsim

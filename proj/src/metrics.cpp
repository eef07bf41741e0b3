#include "negsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace negsim {

using nlohmann::json;

namespace {

double mean_range(std::span<const double> v, std::size_t begin, std::size_t end) {
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += v[i];
    return sum / static_cast<double>(end - begin);
}

std::span<const double> turns_only(const std::vector<double>& with_baseline) {
    if (with_baseline.empty()) return {};
    return std::span<const double>(with_baseline).subspan(1);
}

}  // namespace

double window_change(std::span<const double> values, int w) {
    const std::size_t T = values.size();
    if (T < 2) throw DomainError("EmptySeries: at least two turns are needed");
    if (w < 1) throw DomainError("window must be >= 1");
    const std::size_t wp = std::min<std::size_t>(static_cast<std::size_t>(w), T / 2);
    return mean_range(values, T - wp, T) - mean_range(values, 0, wp);
}

double consensus_change(const ConsensusSeries& series, int w) { return window_change(turns_only(series.g), w); }

TopicEfficiency topic_efficiency(const ConsensusSeries& series, std::string_view topic, int w) {
    std::size_t ti = series.topic_index(topic);
    if (ti == std::string::npos) throw DomainError("UnknownTopic: '" + std::string(topic) + "'");
    TopicEfficiency te;
    te.topic = std::string(topic);
    te.change = window_change(turns_only(series.g_topic[ti]), w);
    te.mentions = series.mention_count(ti);
    if (te.mentions == 0) {
        te.never_discussed = true;
        te.value = 0.0;
    } else {
        te.value = te.change / te.mentions;
    }
    return te;
}

std::vector<DropEvent> detect_drop_events(std::span<const double> values, double tau, int W, int first_turn) {
    std::vector<DropEvent> events;
    const std::size_t n = values.size();
    std::size_t t = 0;
    while (t < n) {
        std::optional<std::size_t> trigger;
        for (std::size_t k = 1; k <= static_cast<std::size_t>(std::max(W, 0)) && t + k < n; ++k) {
            if (values[t] - values[t + k] > tau + kDropEpsilon) {
                trigger = t + k;
                break;
            }
        }
        if (!trigger) {
            ++t;
            continue;
        }
        DropEvent e;
        e.start_turn = first_turn + static_cast<int>(t);
        e.trigger_turn = first_turn + static_cast<int>(*trigger);
        e.magnitude = values[t] - values[*trigger];
        events.push_back(e);
        t = *trigger + 1;
    }
    return events;
}

std::vector<DropEvent> detect_drop_events(const ConsensusSeries& series, double tau, int W) {
    return detect_drop_events(turns_only(series.g), tau, W, 1);
}

std::vector<DropEvent> response_latency(std::vector<DropEvent> events, const Transcript& tr) {
    for (DropEvent& e : events) {
        e.latency_turns.reset();
        e.latency_s.reset();
        for (const Turn& turn : tr.turns) {
            if (turn.index <= e.trigger_turn || !turn.is_intervention()) continue;
            e.latency_turns = turn.index - e.trigger_turn;
            if (e.trigger_turn >= 1 && static_cast<std::size_t>(e.trigger_turn) <= tr.turns.size())
                e.latency_s = turn.timestamp - tr.turns[static_cast<std::size_t>(e.trigger_turn) - 1].timestamp;
            break;
        }
    }
    return events;
}

double fit_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw DomainError("DegenerateWindow: fewer than two points");
    // Offsets from the first x keep translated windows bit-identical.
    const double x0 = points.front().first;
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : points) {
        sx += x - x0;
        sy += y;
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : points) {
        const double dx = (x - x0) - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw DomainError("DegenerateWindow: fewer than two distinct x");
    return sxy / sxx;
}

std::optional<double> mediator_effectiveness(const ConsensusSeries& series, const Transcript& tr, int turn,
                                             std::string_view topic, int window, MeWindowing windowing) {
    if (turn < 1 || static_cast<std::size_t>(turn) > tr.turns.size() ||
        !tr.turns[static_cast<std::size_t>(turn) - 1].is_intervention())
        throw NotAnIntervention(turn);
    std::size_t ti = series.topic_index(topic);
    if (ti == std::string::npos) throw DomainError("UnknownTopic: '" + std::string(topic) + "'");
    const int T = static_cast<int>(series.turns());
    auto usable = [&](int t) { return windowing == MeWindowing::RawTurns || series.mentions[ti][t] == 1; };
    std::vector<std::pair<double, double>> pre, post;
    for (int t = turn - 1; t >= 1 && static_cast<int>(pre.size()) < window; --t) {
        if (windowing == MeWindowing::RawTurns && t < turn - window) break;
        if (usable(t)) pre.emplace_back(t, series.g_topic[ti][t]);
    }
    std::reverse(pre.begin(), pre.end());
    for (int t = turn + 1; t <= T && static_cast<int>(post.size()) < window; ++t) {
        if (windowing == MeWindowing::RawTurns && t > turn + window) break;
        if (usable(t)) post.emplace_back(t, series.g_topic[ti][t]);
    }
    if (pre.size() < 2 || post.size() < 2) return std::nullopt;
    return fit_slope(post) - fit_slope(pre);
}

std::optional<double> mi_mean(const std::array<int, 4>& scores) {
    int sum = 0, n = 0;
    for (int s : scores) {
        if (s == kNotApplicable) continue;
        sum += s;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(sum) / n;
}

std::string fallback_target_topic(const ConsensusSeries& series, int turn, int lookback) {
    if (series.topics.empty()) throw DomainError("series has no topics");
    const int end = std::clamp(turn - 1, 0, static_cast<int>(series.turns()));
    const int begin = std::max(0, end - lookback);
    std::size_t best = 0;
    double best_delta = -1.0;
    for (std::size_t ti = 0; ti < series.topics.size(); ++ti) {
        double delta = std::fabs(series.g_topic[ti][end] - series.g_topic[ti][begin]);
        if (delta > best_delta) {
            best_delta = delta;
            best = ti;
        }
    }
    return series.topics[best];
}

MetricsReport compute_metrics(const Transcript& tr, const ConsensusSeries& series, JudgmentSource& judge,
                              const MetricsOptions& options) {
    MetricsReport r;
    r.run_id = tr.run_id;
    r.scenario_id = tr.scenario_id;
    auto dash = tr.condition.find('-');
    r.mode = dash == std::string::npos ? tr.condition : tr.condition.substr(0, dash);
    r.mediator = tr.config_snapshot.value("mediator", dash == std::string::npos ? std::string{} : tr.condition.substr(dash + 1));
    r.end_reason = tr.end.reason;
    r.turns = static_cast<int>(series.turns());
    if (series.turns() >= 2) r.cc = consensus_change(series, options.cc_window);

    double tle_sum = 0.0;
    for (const auto& topic : series.topics) {
        TopicEfficiency te;
        te.topic = topic;
        if (series.turns() >= 2) {
            te = topic_efficiency(series, topic, options.cc_window);
        } else {
            te.mentions = series.mention_count(series.topic_index(topic));
            te.never_discussed = te.mentions == 0;
        }
        tle_sum += te.value;
        r.tle.push_back(te);
    }
    if (!r.tle.empty()) r.tle_mean = tle_sum / static_cast<double>(r.tle.size());

    r.drops = response_latency(detect_drop_events(series, options.tau, options.drop_window), tr);
    std::vector<double> lt, ls;
    for (const auto& e : r.drops) {
        if (e.latency_turns) {
            lt.push_back(*e.latency_turns);
            if (e.latency_s) ls.push_back(*e.latency_s);
        } else {
            ++r.rl_infinite;
        }
    }
    if (!lt.empty()) r.rl_turns_mean = describe(lt).mean;
    if (!ls.empty()) r.rl_s_mean = describe(ls).mean;

    for (const Turn& turn : tr.turns) {
        if (!turn.is_intervention()) continue;
        InterventionMetrics im;
        im.turn = turn.index;
        if (turn.target_topic && series.topic_index(*turn.target_topic) != std::string::npos) {
            im.target_topic = *turn.target_topic;
        } else {
            im.target_topic = fallback_target_topic(series, turn.index);
            im.target_from_fallback = true;
        }
        im.me = mediator_effectiveness(series, tr, turn.index, im.target_topic, options.me_window,
                                       options.me_windowing);
        std::vector<Turn> prior(tr.turns.begin(), tr.turns.begin() + (turn.index - 1));
        ConversationContext ctx{&tr.scenario, &prior, turn.index};
        MiJudgment mi = judge.mediator_intelligence(tr, turn, ctx);
        im.mi = mi.scores;
        im.mi_mean = mi_mean(mi.scores);
        r.interventions.push_back(im);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

json metrics_report_to_json(const MetricsReport& r) {
    json tle = json::array();
    for (const auto& t : r.tle)
        tle.push_back({{"topic", t.topic},
                       {"change", t.change},
                       {"mentions", t.mentions},
                       {"value", t.value},
                       {"never_discussed", t.never_discussed}});
    json drops = json::array();
    for (const auto& e : r.drops)
        drops.push_back({{"start_turn", e.start_turn},
                         {"trigger_turn", e.trigger_turn},
                         {"magnitude", e.magnitude},
                         {"latency_turns", opt(e.latency_turns)},
                         {"latency_s", opt(e.latency_s)},
                         {"infinite", !e.latency_turns.has_value()}});
    json inter = json::array();
    for (const auto& i : r.interventions)
        inter.push_back({{"turn", i.turn},
                         {"target_topic", i.target_topic},
                         {"target_from_fallback", i.target_from_fallback},
                         {"me", opt(i.me)},
                         {"mi", i.mi},
                         {"mi_mean", opt(i.mi_mean)}});
    return {{"run_id", r.run_id},
            {"scenario_id", r.scenario_id},
            {"mode", r.mode},
            {"mediator", r.mediator},
            {"end_reason", r.end_reason},
            {"turns", r.turns},
            {"cc", r.cc},
            {"tle", tle},
            {"tle_mean", r.tle_mean},
            {"drops", drops},
            {"rl_turns_mean", opt(r.rl_turns_mean)},
            {"rl_s_mean", opt(r.rl_s_mean)},
            {"rl_infinite", r.rl_infinite},
            {"interventions", inter}};
}

MetricsReport metrics_report_from_json(const json& j) {
    MetricsReport r;
    try {
        r.run_id = j.at("run_id").get<std::string>();
        r.scenario_id = j.at("scenario_id").get<std::string>();
        r.mode = j.value("mode", std::string{});
        r.mediator = j.value("mediator", std::string{});
        r.end_reason = j.value("end_reason", std::string("budget"));
        r.turns = j.value("turns", 0);
        r.cc = j.at("cc").get<double>();
        for (const auto& t : j.value("tle", json::array()))
            r.tle.push_back({t.at("topic").get<std::string>(), t.value("change", 0.0), t.value("mentions", 0),
                             t.value("value", 0.0), t.value("never_discussed", false)});
        r.tle_mean = j.value("tle_mean", 0.0);
        for (const auto& e : j.value("drops", json::array())) {
            DropEvent d;
            d.start_turn = e.at("start_turn").get<int>();
            d.trigger_turn = e.at("trigger_turn").get<int>();
            d.magnitude = e.at("magnitude").get<double>();
            d.latency_turns = get_opt<int>(e, "latency_turns");
            d.latency_s = get_opt<double>(e, "latency_s");
            r.drops.push_back(d);
        }
        r.rl_turns_mean = get_opt<double>(j, "rl_turns_mean");
        r.rl_s_mean = get_opt<double>(j, "rl_s_mean");
        r.rl_infinite = j.value("rl_infinite", 0);
        for (const auto& i : j.value("interventions", json::array())) {
            InterventionMetrics im;
            im.turn = i.at("turn").get<int>();
            im.target_topic = i.value("target_topic", std::string{});
            im.target_from_fallback = i.value("target_from_fallback", false);
            im.me = get_opt<double>(i, "me");
            im.mi = i.at("mi").get<std::array<int, 4>>();
            im.mi_mean = get_opt<double>(i, "mi_mean");
            r.interventions.push_back(im);
        }
    } catch (const json::exception& e) {
        throw ParseError("report", e.what());
    }
    return r;
}

std::string serialize_metrics_report(const MetricsReport& r) { return metrics_report_to_json(r).dump(2) + "\n"; }

json series_to_json(const ConsensusSeries& s, const Transcript& tr) {
    json g_topic = json::object(), mentions = json::object();
    for (std::size_t ti = 0; ti < s.topics.size(); ++ti) {
        g_topic[s.topics[ti]] = s.g_topic[ti];
        mentions[s.topics[ti]] = s.mentions[ti];
    }
    json interventions = json::array();
    for (const Turn& t : tr.turns)
        if (t.is_intervention()) interventions.push_back(t.index);
    json records = json::array();
    for (const auto& row : s.records)
        for (const auto& rec : row)
            records.push_back({{"turn", rec.turn},
                               {"judged_turn", rec.judged_turn},
                               {"a", rec.party_a},
                               {"b", rec.party_b},
                               {"topic", rec.topic},
                               {"dims", rec.judgment.dims},
                               {"overall", rec.judgment.overall},
                               {"missing", rec.judgment.missing}});
    return {{"run_id", tr.run_id},
            {"parties", s.parties},
            {"topics", s.topics},
            {"g", s.g},
            {"g_topic", g_topic},
            {"mentions", mentions},
            {"interventions", interventions},
            {"records", records}};
}

// ---------------------------------------------------------------------------
// Aggregation

Stat describe(std::span<const double> xs) {
    Stat s;
    s.n = xs.size();
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

BatchSummary aggregate_batch(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw EmptyInputError("EmptyBatch: no metrics reports to aggregate");
    std::vector<double> cc, tle, lt, ls, me, mi, counts;
    BatchSummary b;
    b.runs = reports.size();
    for (const auto& r : reports) {
        cc.push_back(r.cc);
        tle.push_back(r.tle_mean);
        for (const auto& e : r.drops) {
            if (e.latency_turns) {
                lt.push_back(*e.latency_turns);
                if (e.latency_s) ls.push_back(*e.latency_s);
            } else {
                ++b.rl_infinite;
            }
        }
        for (const auto& i : r.interventions) {
            if (i.me) me.push_back(*i.me);
            if (i.mi_mean) mi.push_back(*i.mi_mean);
        }
        counts.push_back(static_cast<double>(r.interventions.size()));
    }
    b.cc = describe(cc);
    b.tle = describe(tle);
    b.rl_turns = describe(lt);
    b.rl_s = describe(ls);
    b.me = describe(me);
    b.mi = describe(mi);
    b.interventions = describe(counts);
    return b;
}

// ---------------------------------------------------------------------------
// Rank correlation

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("LengthMismatch: spearman inputs differ in length");
    if (x.size() < 3) throw DomainError("TooFewPoints: spearman needs at least 3 points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("ConstantInput: spearman input has no rank variation");
    const double denom = sxx == syy ? sxx : std::sqrt(sxx * syy);
    SpearmanResult r;
    r.rho = std::clamp(sxy / denom, -1.0, 1.0);
    if (std::fabs(r.rho) >= 1.0) {
        r.p = 0.0;
        return r;
    }
    const double df = n - 2.0;
    const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
    boost::math::students_t dist(df);
    r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 0.0, 1.0);
    return r;
}

}  // namespace negsim

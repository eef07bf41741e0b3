#include "negsim/workflow.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "json_util.hpp"

namespace negsim {

using detail::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::string fmt(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

BackendSpec backend_spec_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("backend entry must be an object");
    try {
        BackendSpec spec;
        spec.id = j.value("id", std::string("default"));
        std::string kind = j.value("kind", std::string("scripted"));
        if (kind == "scripted") {
            spec.kind = BackendKind::Scripted;
            spec.script_path = resolve(base_dir, j.at("script").get<std::string>());
            spec.model_name = j.value("model", std::string("scripted"));
        } else if (kind == "http_chat" || kind == "http") {
            spec.kind = BackendKind::HttpChat;
            spec.endpoint = j.at("endpoint").get<std::string>();
            spec.model_name = j.value("model", std::string{});
            spec.api_key_env = j.value("api_key_env", std::string{});
            spec.timeout_s = j.value("timeout_s", spec.timeout_s);
            spec.max_parallelism = j.value("max_parallelism", spec.max_parallelism);
        } else {
            throw ConfigError("unknown backend kind '" + kind + "'");
        }
        if (auto r = j.find("retry"); r != j.end()) {
            spec.retry.max_attempts = r->value("max_attempts", spec.retry.max_attempts);
            spec.retry.initial_backoff_s = r->value("initial_backoff_s", spec.retry.initial_backoff_s);
            spec.retry.backoff_multiplier = r->value("multiplier", spec.retry.backoff_multiplier);
        }
        if (spec.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend entry: ") + e.what());
    }
}

SessionConfig session_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    SessionConfig cfg;
    try {
        if (auto it = j.find("run"); it != j.end()) cfg.run = run_config_from_json(*it);
        if (auto it = j.find("backends"); it != j.end()) {
            if (!it->is_array()) throw ConfigError("'backends' must be an array");
            for (const auto& b : *it) cfg.backends.push_back(backend_spec_from_json(b, base_dir));
        }
        if (auto it = j.find("metrics"); it != j.end()) {
            cfg.metrics.cc_window = it->value("cc_window", cfg.metrics.cc_window);
            cfg.metrics.tau = it->value("tau", cfg.metrics.tau);
            cfg.metrics.drop_window = it->value("drop_window", cfg.metrics.drop_window);
            cfg.metrics.me_window = it->value("me_window", cfg.metrics.me_window);
            std::string w = it->value("me_windowing", std::string("mention"));
            if (w == "raw")
                cfg.metrics.me_windowing = MeWindowing::RawTurns;
            else if (w == "mention")
                cfg.metrics.me_windowing = MeWindowing::MentionTurns;
            else
                throw ConfigError("metrics.me_windowing must be 'mention' or 'raw'");
        }
        if (auto it = j.find("consensus"); it != j.end()) {
            std::string v = it->value("variant", std::string("multi"));
            if (v == "multi")
                cfg.consensus.variant = ScoringVariant::MultiDimension;
            else if (v == "single")
                cfg.consensus.variant = ScoringVariant::SingleDimension;
            else
                throw ConfigError("consensus.variant must be 'multi' or 'single'");
            cfg.consensus.condition_on_previous = it->value("condition_on_previous", false);
        }
        if (auto it = j.find("prompt_dir"); it != j.end() && it->is_string())
            cfg.prompt_dir = resolve(base_dir, it->get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration: ") + e.what());
    }
    return cfg;
}

json backend_snapshot(const BackendSpec& spec) {
    json j{{"id", spec.id}, {"model", spec.model_name}};
    if (spec.kind == BackendKind::Scripted) {
        j["kind"] = "scripted";
        j["script"] = spec.script_path.filename().string();
        j["digest"] = fs::exists(spec.script_path) ? detail::hex64(detail::fnv1a64(detail::read_file(spec.script_path)))
                                                   : std::string{};
    } else {
        j["kind"] = "http_chat";
        j["endpoint"] = spec.endpoint;
    }
    return j;
}

std::unique_ptr<Gateway> make_gateway(const std::vector<BackendSpec>& specs) {
    bool all_scripted = true;
    for (const auto& s : specs) all_scripted = all_scripted && s.kind == BackendKind::Scripted;
    std::unique_ptr<Clock> clock;
    if (all_scripted)
        clock = std::make_unique<VirtualClock>();
    else
        clock = std::make_unique<SteadyClock>();
    auto gw = std::make_unique<Gateway>(std::move(clock));
    for (const auto& s : specs) gw->register_backend(make_backend(s));
    return gw;
}

PromptLibrary load_prompts(const SessionConfig& cfg) {
    return cfg.prompt_dir ? PromptLibrary::load_dir(*cfg.prompt_dir) : PromptLibrary::load_default();
}

RunOutcome run_to_files(const SessionConfig& cfg, const fs::path& scenario_path, const fs::path& out_dir) {
    if (!fs::exists(scenario_path)) throw IoError("scenario file not found: " + scenario_path.string());
    Scenario s = load_scenario(scenario_path);
    if (cfg.backends.empty()) throw ConfigError("no backends configured");
    auto gateway = make_gateway(cfg.backends);
    PromptLibrary prompts = load_prompts(cfg);
    RunConfig run = cfg.run;
    run.backends = json::array();
    for (const auto& b : cfg.backends) run.backends.push_back(backend_snapshot(b));

    RunOutcome outcome;
    RunEnvironment env{gateway.get(), &prompts};
    const fs::path dir = out_dir / s.id / condition_name(s, run);
    run_batch(env, s, run, [&](const Transcript& tr) {
        fs::path base = dir / tr.run_id;
        fs::path transcript = base;
        transcript += ".transcript";
        fs::path calls = base;
        calls += ".calls.jsonl";
        detail::write_file(transcript, serialize_transcript(tr));
        std::string log;
        for (const auto& rec : gateway->drain_call_log()) log += call_record_jsonl(rec);
        detail::write_file(calls, log);
        int interventions = 0;
        for (const auto& t : tr.turns) interventions += t.is_intervention();
        outcome.transcripts.push_back(transcript);
        outcome.summaries.push_back(tr.run_id + "\tturns=" + std::to_string(tr.turns.size()) + "/" +
                                    std::to_string(tr.budget) + "\tinterventions=" + std::to_string(interventions) +
                                    "\tend=" + tr.end.reason);
        if (tr.end.reason == "truncated") ++outcome.truncated;
    });
    outcome.warnings = gateway->diagnostics().warnings();
    return outcome;
}

EvaluateOutcome evaluate_files(const SessionConfig& cfg, const std::vector<fs::path>& transcripts,
                               const fs::path& out_dir, const std::optional<fs::path>& cache_path) {
    if (transcripts.empty()) throw EmptyInputError("no transcripts to evaluate");
    std::unique_ptr<Gateway> gateway = cfg.backends.empty() ? std::make_unique<Gateway>() : make_gateway(cfg.backends);
    PromptLibrary prompts;
    bool live = gateway->has_backend(cfg.run.judge_backend);
    if (live) prompts = load_prompts(cfg);

    EvaluateOutcome outcome;
    for (const fs::path& path : transcripts) {
        if (!fs::exists(path)) throw IoError("transcript not found: " + path.string());
        Transcript tr = load_transcript(path);
        const fs::path dir = out_dir.empty() ? path.parent_path() : out_dir;
        fs::path cache_file = cache_path ? *cache_path : dir / (tr.run_id + ".judgments.jsonl");
        CallSite site;
        if (live) site = CallSite{gateway.get(), &prompts, cfg.run.judge_backend, cfg.run.judge_temperature};
        CachingJudge judge(site, JudgmentCache::load(cache_file), cfg.consensus);
        ConsensusSeries series = track_consensus(tr, tr.scenario, judge);
        MetricsReport report = compute_metrics(tr, series, judge, cfg.metrics);

        fs::path report_file = dir / (tr.run_id + ".report.json");
        fs::path series_file = dir / (tr.run_id + ".series.json");
        detail::write_file(report_file, serialize_metrics_report(report));
        detail::write_file(series_file, series_to_json(series, tr).dump(2) + "\n");
        judge.cache().save(cache_file);
        outcome.written.insert(outcome.written.end(), {report_file, series_file, cache_file});
        outcome.reports.push_back(std::move(report));
    }
    outcome.gateway_calls = gateway->call_count();
    outcome.warnings = gateway->diagnostics().warnings();
    return outcome;
}

std::vector<MetricsReport> collect_reports(const std::vector<fs::path>& paths) {
    std::vector<fs::path> files;
    auto is_report = [](const fs::path& p) {
        const std::string name = p.filename().string();
        return name.size() > 12 && name.compare(name.size() - 12, 12, ".report.json") == 0;
    };
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& e : fs::recursive_directory_iterator(p))
                if (e.is_regular_file() && is_report(e.path())) files.push_back(e.path());
        } else if (fs::exists(p)) {
            files.push_back(p);
        } else {
            throw IoError("report path not found: " + p.string());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<MetricsReport> out;
    for (const auto& f : files) out.push_back(metrics_report_from_json(detail::parse_json_document(detail::read_file(f))));
    return out;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw EmptyInputError("EmptyBatch: no metrics reports found");
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<MetricsReport>> groups;
    for (const auto& r : reports) groups[{r.scenario_id, r.mode, r.mediator}].push_back(r);
    std::vector<SummaryRow> rows;
    for (const auto& [key, group] : groups)
        rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), aggregate_batch(group)});
    return rows;
}

std::string render_summary_table(const std::vector<SummaryRow>& rows) {
    std::ostringstream ss;
    ss << "scenario\tmode\tmediator\truns\tCC%\tCC%_sd\tTLE%\tTLE%_sd\tRL_s\tRL_s_sd\tRL_turns\tRL_turns_sd\tRL_inf"
          "\tME%\tME%_sd\tME_n\tMI\tMI_sd\tMI_n\tinterventions\n";
    auto cell = [](const Stat& s, double scale) {
        if (s.n == 0) return std::string("NA\tNA");
        return fmt(s.mean * scale) + "\t" + fmt(s.sd * scale);
    };
    for (const auto& r : rows) {
        const BatchSummary& b = r.summary;
        ss << r.scenario << "\t" << r.mode << "\t" << r.mediator << "\t" << b.runs << "\t" << cell(b.cc, 100.0) << "\t"
           << cell(b.tle, 100.0) << "\t" << cell(b.rl_s, 1.0) << "\t" << cell(b.rl_turns, 1.0) << "\t"
           << b.rl_infinite << "\t" << cell(b.me, 100.0) << "\t" << b.me.n << "\t" << cell(b.mi, 1.0) << "\t"
           << b.mi.n << "\t" << fmt(b.interventions.mean, 2) << "\n";
    }
    return ss.str();
}

std::string render_plot_data(const json& series) {
    try {
        const auto topics = series.at("topics").get<std::vector<std::string>>();
        const auto g = series.at("g").get<std::vector<double>>();
        const auto& g_topic = series.at("g_topic");
        std::vector<int> flagged(g.size(), 0);
        for (const auto& t : series.value("interventions", json::array())) {
            int idx = t.get<int>();
            if (idx >= 0 && static_cast<std::size_t>(idx) < flagged.size()) flagged[idx] = 1;
        }
        std::vector<std::vector<double>> columns;
        for (const auto& t : topics) {
            auto col = g_topic.at(t).get<std::vector<double>>();
            if (col.size() != g.size()) throw ParseError("g_topic." + t, "length differs from g");
            columns.push_back(std::move(col));
        }
        std::ostringstream ss;
        ss << "turn\tseries\tvalue\tintervention\n";
        for (std::size_t t = 0; t < g.size(); ++t) {
            for (std::size_t i = 0; i < topics.size(); ++i)
                ss << t << "\t" << topics[i] << "\t" << fmt(columns[i][t], 6) << "\t" << flagged[t] << "\n";
            ss << t << "\tOVERALL\t" << fmt(g[t], 6) << "\t" << flagged[t] << "\n";
        }
        return ss.str();
    } catch (const json::exception& e) {
        throw ParseError("series", e.what());
    }
}

std::string render_violations(const std::vector<Violation>& violations) {
    std::ostringstream ss;
    for (const auto& v : violations)
        ss << (v.severity == Severity::Error ? "error" : "warning") << "\t" << v.code << "\t" << v.path << "\t"
           << v.message << "\n";
    return ss.str();
}

}  // namespace negsim

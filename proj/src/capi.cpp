#include "negsim/negsim.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "json_util.hpp"
#include "negsim/workflow.hpp"

using negsim::detail::json;

struct negsim_scenario {
    negsim::Scenario scenario;
};

struct negsim_session {
    negsim::SessionConfig config;
};

namespace {

thread_local std::string g_last_error;

negsim_status status_of(negsim::ErrorKind kind) {
    using K = negsim::ErrorKind;
    switch (kind) {
        case K::Parse: return NEGSIM_ERR_PARSE;
        case K::Validation: return NEGSIM_ERR_VALIDATION;
        case K::Config: return NEGSIM_ERR_CONFIG;
        case K::Io: return NEGSIM_ERR_IO;
        case K::EmptyInput: return NEGSIM_ERR_EMPTY_INPUT;
        case K::BackendUnavailable: return NEGSIM_ERR_BACKEND;
        case K::Auth: return NEGSIM_ERR_AUTH;
        case K::ScriptExhausted: return NEGSIM_ERR_SCRIPT_EXHAUSTED;
        case K::Extraction:
        case K::Schema: return NEGSIM_ERR_EXTRACTION;
        case K::CacheMiss: return NEGSIM_ERR_CACHE_MISS;
        case K::Domain: return NEGSIM_ERR_DOMAIN;
        case K::Internal: break;
    }
    return NEGSIM_ERR_INTERNAL;
}

negsim_status fail(negsim_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class F>
negsim_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return NEGSIM_OK;
    } catch (const negsim::ValidationError& e) {
        return fail(NEGSIM_ERR_VALIDATION, std::string(e.what()) + "\n" + negsim::render_violations(e.violations()));
    } catch (const negsim::Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const json::exception& e) {
        return fail(NEGSIM_ERR_PARSE, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(NEGSIM_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(NEGSIM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(NEGSIM_ERR_INTERNAL, "unknown failure");
    }
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

#define NEGSIM_REQUIRE(cond, what) \
    if (!(cond)) return fail(NEGSIM_ERR_INVALID_ARGUMENT, what)

json string_list(const std::vector<std::string>& v) { return json(v); }

json path_list(const std::vector<std::filesystem::path>& v) {
    json out = json::array();
    for (const auto& p : v) out.push_back(p.string());
    return out;
}

}  // namespace

extern "C" {

const char* negsim_last_error(void) { return g_last_error.c_str(); }

const char* negsim_status_name(negsim_status status) {
    switch (status) {
        case NEGSIM_OK: return "ok";
        case NEGSIM_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case NEGSIM_ERR_PARSE: return "parse";
        case NEGSIM_ERR_VALIDATION: return "validation";
        case NEGSIM_ERR_CONFIG: return "config";
        case NEGSIM_ERR_IO: return "io";
        case NEGSIM_ERR_EMPTY_INPUT: return "empty_input";
        case NEGSIM_ERR_BACKEND: return "backend_unavailable";
        case NEGSIM_ERR_AUTH: return "auth";
        case NEGSIM_ERR_SCRIPT_EXHAUSTED: return "script_exhausted";
        case NEGSIM_ERR_EXTRACTION: return "extraction";
        case NEGSIM_ERR_CACHE_MISS: return "cache_miss";
        case NEGSIM_ERR_DOMAIN: return "domain";
        case NEGSIM_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* negsim_version(void) { return "0.1.0"; }

void negsim_free_string(char* s) { std::free(s); }

negsim_status negsim_scenario_load(const char* path, negsim_scenario** out) {
    NEGSIM_REQUIRE(path && out, "path and out must not be null");
    *out = nullptr;
    return guarded([&] {
        if (!std::filesystem::exists(path)) throw negsim::IoError(std::string("scenario file not found: ") + path);
        *out = new negsim_scenario{negsim::load_scenario(path)};
    });
}

negsim_status negsim_scenario_parse(const char* text, negsim_scenario** out) {
    NEGSIM_REQUIRE(text && out, "text and out must not be null");
    *out = nullptr;
    return guarded([&] {
        negsim::Scenario s = negsim::parse_scenario(text);
        auto violations = negsim::validate_scenario(s);
        if (negsim::has_errors(violations)) throw negsim::ValidationError(std::move(violations));
        *out = new negsim_scenario{std::move(s)};
    });
}

void negsim_scenario_free(negsim_scenario* s) { delete s; }

const char* negsim_scenario_id(const negsim_scenario* s) { return s ? s->scenario.id.c_str() : ""; }

size_t negsim_scenario_party_count(const negsim_scenario* s) { return s ? s->scenario.parties.size() : 0; }

size_t negsim_scenario_topic_count(const negsim_scenario* s) { return s ? s->scenario.topics.size() : 0; }

negsim_status negsim_scenario_serialize(const negsim_scenario* s, char** out) {
    NEGSIM_REQUIRE(s && out, "scenario and out must not be null");
    return guarded([&] { *out = dup(negsim::serialize_scenario(s->scenario)); });
}

negsim_status negsim_validate_file(const char* path, char** report, int* error_count) {
    NEGSIM_REQUIRE(path && report && error_count, "arguments must not be null");
    return guarded([&] {
        if (!std::filesystem::exists(path)) throw negsim::IoError(std::string("scenario file not found: ") + path);
        negsim::Scenario s = negsim::parse_scenario(negsim::detail::read_file(path));
        auto violations = negsim::validate_scenario(s);
        int errors = 0;
        for (const auto& v : violations) errors += v.severity == negsim::Severity::Error;
        *report = dup(negsim::render_violations(violations));
        *error_count = errors;
    });
}

negsim_status negsim_session_create(const char* config_json, const char* base_dir, negsim_session** out) {
    NEGSIM_REQUIRE(out, "out must not be null");
    *out = nullptr;
    return guarded([&] {
        auto session = std::make_unique<negsim_session>();
        if (config_json && *config_json) {
            json j = negsim::detail::parse_json_document(config_json);
            session->config = negsim::session_config_from_json(j, base_dir ? base_dir : "");
        }
        *out = session.release();
    });
}

void negsim_session_destroy(negsim_session* session) { delete session; }

negsim_status negsim_session_add_backend(negsim_session* session, const char* id, const char* shorthand) {
    NEGSIM_REQUIRE(session && id && shorthand, "arguments must not be null");
    return guarded([&] {
        negsim::BackendSpec spec = negsim::parse_backend_shorthand(shorthand, id);
        auto& list = session->config.backends;
        std::erase_if(list, [&](const negsim::BackendSpec& b) { return b.id == spec.id; });
        list.push_back(std::move(spec));
    });
}

negsim_status negsim_session_set_run(negsim_session* session, const char* run_json) {
    NEGSIM_REQUIRE(session && run_json, "arguments must not be null");
    return guarded([&] {
        json patch = negsim::detail::parse_json_document(run_json);
        if (!patch.is_object()) throw negsim::ConfigError("run settings must be a JSON object");
        json merged = negsim::run_config_to_json(session->config.run);
        merged.update(patch);
        session->config.run = negsim::run_config_from_json(merged);
    });
}

negsim_status negsim_session_config(const negsim_session* session, char** out) {
    NEGSIM_REQUIRE(session && out, "arguments must not be null");
    return guarded([&] {
        json backends = json::array();
        for (const auto& b : session->config.backends) backends.push_back(negsim::backend_snapshot(b));
        json j{{"run", negsim::run_config_to_json(session->config.run)}, {"backends", backends}};
        *out = dup(j.dump(2));
    });
}

negsim_status negsim_run(negsim_session* session, const char* scenario_path, const char* out_dir, char** summary) {
    NEGSIM_REQUIRE(session && scenario_path && out_dir && summary, "arguments must not be null");
    return guarded([&] {
        negsim::RunOutcome r = negsim::run_to_files(session->config, scenario_path, out_dir);
        json j{{"transcripts", path_list(r.transcripts)},
               {"summaries", string_list(r.summaries)},
               {"warnings", string_list(r.warnings)},
               {"truncated", r.truncated}};
        *summary = dup(j.dump(2));
    });
}

negsim_status negsim_evaluate(negsim_session* session, const char* const* transcripts, size_t count,
                              const char* out_dir, const char* cache_path, char** summary) {
    NEGSIM_REQUIRE(session && summary && (transcripts || count == 0), "arguments must not be null");
    return guarded([&] {
        std::vector<std::filesystem::path> paths;
        for (size_t i = 0; i < count; ++i) {
            if (!transcripts[i]) throw negsim::ConfigError("null transcript path");
            paths.emplace_back(transcripts[i]);
        }
        std::optional<std::filesystem::path> cache;
        if (cache_path && *cache_path) cache = cache_path;
        negsim::EvaluateOutcome r = negsim::evaluate_files(session->config, paths, out_dir ? out_dir : "", cache);
        json reports = json::array();
        for (const auto& rep : r.reports) reports.push_back(negsim::metrics_report_to_json(rep));
        json j{{"written", path_list(r.written)},
               {"reports", reports},
               {"warnings", string_list(r.warnings)},
               {"gateway_calls", r.gateway_calls}};
        *summary = dup(j.dump(2));
    });
}

negsim_status negsim_report(const char* const* paths, size_t count, char** table) {
    NEGSIM_REQUIRE(table && (paths || count == 0), "arguments must not be null");
    return guarded([&] {
        std::vector<std::filesystem::path> list;
        for (size_t i = 0; i < count; ++i) list.emplace_back(paths[i]);
        auto rows = negsim::summarize(negsim::collect_reports(list));
        *table = dup(negsim::render_summary_table(rows));
    });
}

negsim_status negsim_plot_data(const char* series_path, char** table) {
    NEGSIM_REQUIRE(series_path && table, "arguments must not be null");
    return guarded([&] {
        if (!std::filesystem::exists(series_path))
            throw negsim::IoError(std::string("series file not found: ") + series_path);
        json series = negsim::detail::parse_json_document(negsim::detail::read_file(series_path));
        *table = dup(negsim::render_plot_data(series));
    });
}

int negsim_turn_budget(size_t parties, size_t topics, int override_budget) {
    if (override_budget > 0) return override_budget;
    negsim::Scenario s;
    s.parties.resize(parties);
    s.topics.resize(topics);
    return negsim::turn_budget(s);
}

negsim_status negsim_consensus_change(const double* values, size_t n, int window, double* out) {
    NEGSIM_REQUIRE(out && (values || n == 0), "arguments must not be null");
    return guarded([&] { *out = negsim::window_change(std::span<const double>(values, n), window); });
}

negsim_status negsim_fit_slope(const double* x, const double* y, size_t n, double* out) {
    NEGSIM_REQUIRE(out && ((x && y) || n == 0), "arguments must not be null");
    return guarded([&] {
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < n; ++i) pts.emplace_back(x[i], y[i]);
        *out = negsim::fit_slope(pts);
    });
}

negsim_status negsim_spearman(const double* x, const double* y, size_t n, double* rho, double* p) {
    NEGSIM_REQUIRE(rho && p && ((x && y) || n == 0), "arguments must not be null");
    return guarded([&] {
        auto r = negsim::spearman(std::span<const double>(x, n), std::span<const double>(y, n));
        *rho = r.rho;
        *p = r.p;
    });
}

negsim_status negsim_detect_drops(const double* values, size_t n, double tau, int window, char** out) {
    NEGSIM_REQUIRE(out && (values || n == 0), "arguments must not be null");
    return guarded([&] {
        json arr = json::array();
        for (const auto& e : negsim::detect_drop_events(std::span<const double>(values, n), tau, window))
            arr.push_back({{"start_turn", e.start_turn}, {"trigger_turn", e.trigger_turn}, {"magnitude", e.magnitude}});
        *out = dup(arr.dump());
    });
}

negsim_status negsim_mi_mean(const int* scores, double* out, int* defined) {
    NEGSIM_REQUIRE(scores && out && defined, "arguments must not be null");
    return guarded([&] {
        std::array<int, 4> s{scores[0], scores[1], scores[2], scores[3]};
        for (int v : s)
            if (v != negsim::kNotApplicable && (v < 1 || v > 5))
                throw negsim::DomainError("MI scores must be 1..5 or -1");
        auto m = negsim::mi_mean(s);
        *defined = m.has_value();
        *out = m.value_or(0.0);
    });
}

}  // extern "C"

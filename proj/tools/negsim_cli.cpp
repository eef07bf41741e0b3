// negsim: run negotiation batches, evaluate transcripts, summarize reports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "negsim/negsim.h"

namespace fs = std::filesystem;

namespace {

int exit_code(negsim_status s) {
    switch (s) {
        case NEGSIM_OK: return 0;
        case NEGSIM_ERR_INVALID_ARGUMENT:
        case NEGSIM_ERR_PARSE:
        case NEGSIM_ERR_VALIDATION:
        case NEGSIM_ERR_CONFIG:
        case NEGSIM_ERR_IO: return 2;
        case NEGSIM_ERR_EMPTY_INPUT: return 3;
        default: return 1;
    }
}

int report_failure(negsim_status s) {
    std::cerr << "negsim: " << negsim_status_name(s) << ": " << negsim_last_error() << "\n";
    return exit_code(s);
}

struct CString {
    char* p = nullptr;
    ~CString() { negsim_free_string(p); }
    std::string str() const { return p ? p : ""; }
};

struct Session {
    negsim_session* p = nullptr;
    ~Session() { negsim_session_destroy(p); }
};

std::optional<std::string> read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Accepts a path, or a bare scenario name (or unique name prefix) looked up
// under $NEGSIM_SCENARIO_DIR and ./scenarios.
std::string resolve_scenario(const std::string& arg) {
    if (fs::exists(arg)) return arg;
    std::vector<fs::path> dirs{"scenarios"};
    if (const char* env = std::getenv("NEGSIM_SCENARIO_DIR"); env && *env) dirs.insert(dirs.begin(), env);
    for (const auto& d : dirs) {
        fs::path candidate = d / (arg + ".scenario");
        if (fs::exists(candidate)) return candidate.string();
    }
    // "hopkins" finds hopkins_hmo.scenario when the prefix is unambiguous
    std::vector<fs::path> hits;
    for (const auto& d : dirs) {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(d, ec)) {
            const fs::path& p = entry.path();
            if (p.extension() == ".scenario" && p.stem().string().rfind(arg, 0) == 0) hits.push_back(p);
        }
        if (!hits.empty()) break;
    }
    if (hits.size() == 1) return hits.front().string();
    return arg;
}

struct Common {
    std::string config;
    std::string backend;
    std::string judge_backend;
};

negsim_status open_session(const Common& c, Session& session) {
    std::string text;
    std::string base;
    if (!c.config.empty()) {
        auto t = read_text(c.config);
        if (!t) {
            std::cerr << "negsim: config: cannot read " << c.config << "\n";
            return NEGSIM_ERR_IO;
        }
        text = *t;
        base = fs::path(c.config).parent_path().string();
    }
    negsim_status s = negsim_session_create(text.c_str(), base.empty() ? nullptr : base.c_str(), &session.p);
    if (s != NEGSIM_OK) return s;
    if (!c.backend.empty()) {
        s = negsim_session_add_backend(session.p, "default", c.backend.c_str());
        if (s != NEGSIM_OK) return s;
    }
    if (!c.judge_backend.empty()) {
        s = negsim_session_add_backend(session.p, "judge", c.judge_backend.c_str());
        if (s != NEGSIM_OK) return s;
        s = negsim_session_set_run(session.p, R"({"judge_backend": "judge"})");
    }
    return s;
}

void print_json_lines(const std::string& json_text, const char* key, std::ostream& out, const char* prefix = "") {
    // The C API returns small JSON documents; pick string arrays out by key.
    auto pos = json_text.find(std::string("\"") + key + "\"");
    if (pos == std::string::npos) return;
    pos = json_text.find('[', pos);
    if (pos == std::string::npos) return;
    std::size_t i = pos + 1;
    while (i < json_text.size() && json_text[i] != ']') {
        if (json_text[i] == '"') {
            std::string item;
            ++i;
            while (i < json_text.size() && json_text[i] != '"') {
                if (json_text[i] == '\\' && i + 1 < json_text.size()) {
                    char n = json_text[++i];
                    item += n == 't' ? '\t' : n == 'n' ? '\n' : n;
                } else {
                    item += json_text[i];
                }
                ++i;
            }
            out << prefix << item << "\n";
        }
        ++i;
    }
}

int write_or_print(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        return 0;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "negsim: cannot write " << out_path << "\n";
        return 2;
    }
    out << content;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-party negotiation simulation and mediator evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", negsim_version());

    // run
    Common run_common;
    std::string scenario, out_dir = "out", mediator, mode;
    std::optional<int> runs, budget, gap, thoughts, parallelism;
    std::optional<double> threshold;
    auto* run = app.add_subcommand("run", "Simulate a batch of negotiations");
    run->add_option("--scenario", scenario, "Scenario file or name")->required();
    run->add_option("--config", run_common.config, "JSON configuration file");
    run->add_option("--backend", run_common.backend, "Backend for all roles: scripted:PATH or http:URL#model");
    run->add_option("--judge-backend", run_common.judge_backend, "Separate backend for judging calls");
    run->add_option("--mediator", mediator, "none, generic or social");
    run->add_option("--mode", mode, "general, competing, avoiding or accommodating");
    run->add_option("--runs", runs, "Runs per condition");
    run->add_option("--budget", budget, "Turn budget override");
    run->add_option("--threshold", threshold, "Engage threshold of the social mediator");
    run->add_option("--min-gap", gap, "Minimum turns between interventions");
    run->add_option("--thoughts", thoughts, "Thoughts per agent per turn");
    run->add_option("--parallelism", parallelism, "Concurrent calls per turn");
    run->add_option("--out", out_dir, "Output directory");

    // evaluate
    Common eval_common;
    std::vector<std::string> transcripts;
    std::string eval_out, cache;
    auto* evaluate = app.add_subcommand("evaluate", "Track consensus and compute metrics for transcripts");
    evaluate->add_option("transcripts", transcripts, "Transcript files")->required();
    evaluate->add_option("--config", eval_common.config, "JSON configuration file");
    evaluate->add_option("--judge-backend", eval_common.judge_backend, "Judge backend: scripted:PATH or http:URL#model");
    evaluate->add_option("--out", eval_out, "Output directory (default: next to each transcript)");
    evaluate->add_option("--cache", cache, "Judgment cache file (default: <run>.judgments.jsonl)");

    // report
    std::vector<std::string> report_paths;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Summary table over metrics reports");
    report->add_option("paths", report_paths, "Report files or directories")->required();
    report->add_option("--out", report_out, "Write the table to a file");

    // plot-data
    std::string series_path, plot_out;
    auto* plot = app.add_subcommand("plot-data", "Flat trajectory table from a series file");
    plot->add_option("series", series_path, "Series file")->required();
    plot->add_option("--out", plot_out, "Write the table to a file");

    // validate
    std::vector<std::string> validate_paths;
    auto* validate = app.add_subcommand("validate", "Check scenario files");
    validate->add_option("scenarios", validate_paths, "Scenario files or names")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) {
        Session session;
        if (negsim_status s = open_session(run_common, session); s != NEGSIM_OK) return report_failure(s);
        std::ostringstream patch;
        patch << "{";
        bool first = true;
        auto field = [&](const std::string& key, const std::string& value) {
            patch << (first ? "" : ",") << "\"" << key << "\":" << value;
            first = false;
        };
        if (!mediator.empty()) field("mediator", "\"" + mediator + "\"");
        if (!mode.empty()) field("mode_override", "\"" + mode + "\"");
        if (runs) field("runs_per_condition", std::to_string(*runs));
        if (budget) field("turn_budget", std::to_string(*budget));
        if (threshold) field("engage_threshold", std::to_string(*threshold));
        if (gap) field("min_turn_gap", std::to_string(*gap));
        if (thoughts) field("thoughts_per_agent", std::to_string(*thoughts));
        if (parallelism) field("parallelism", std::to_string(*parallelism));
        patch << "}";
        if (negsim_status s = negsim_session_set_run(session.p, patch.str().c_str()); s != NEGSIM_OK)
            return report_failure(s);
        CString summary;
        std::string path = resolve_scenario(scenario);
        if (negsim_status s = negsim_run(session.p, path.c_str(), out_dir.c_str(), &summary.p); s != NEGSIM_OK)
            return report_failure(s);
        print_json_lines(summary.str(), "summaries", std::cout);
        print_json_lines(summary.str(), "warnings", std::cerr, "warning: ");
        return 0;
    }

    if (evaluate->parsed()) {
        Session session;
        if (negsim_status s = open_session(eval_common, session); s != NEGSIM_OK) return report_failure(s);
        std::vector<const char*> ptrs;
        for (const auto& t : transcripts) ptrs.push_back(t.c_str());
        CString summary;
        negsim_status s = negsim_evaluate(session.p, ptrs.data(), ptrs.size(), eval_out.empty() ? nullptr : eval_out.c_str(),
                                          cache.empty() ? nullptr : cache.c_str(), &summary.p);
        if (s != NEGSIM_OK) return report_failure(s);
        print_json_lines(summary.str(), "written", std::cout);
        print_json_lines(summary.str(), "warnings", std::cerr, "warning: ");
        return 0;
    }

    if (report->parsed()) {
        std::vector<const char*> ptrs;
        for (const auto& p : report_paths) ptrs.push_back(p.c_str());
        CString table;
        if (negsim_status s = negsim_report(ptrs.data(), ptrs.size(), &table.p); s != NEGSIM_OK)
            return report_failure(s);
        return write_or_print(table.str(), report_out);
    }

    if (plot->parsed()) {
        CString table;
        if (negsim_status s = negsim_plot_data(series_path.c_str(), &table.p); s != NEGSIM_OK)
            return report_failure(s);
        return write_or_print(table.str(), plot_out);
    }

    if (validate->parsed()) {
        int rc = 0;
        for (const auto& arg : validate_paths) {
            std::string path = resolve_scenario(arg);
            CString listing;
            int errors = 0;
            negsim_status s = negsim_validate_file(path.c_str(), &listing.p, &errors);
            if (s != NEGSIM_OK) {
                report_failure(s);
                rc = std::max(rc, exit_code(s));
                continue;
            }
            std::cout << path << ": " << (errors ? "invalid" : "ok") << "\n" << listing.str();
            if (errors) rc = std::max(rc, 2);
        }
        return rc;
    }
    return 0;
}

/* C interface to the negotiation simulation and evaluation engine. */
#ifndef NEGSIM_NEGSIM_H
#define NEGSIM_NEGSIM_H

#include <stddef.h>

#if defined(_WIN32)
#define NEGSIM_API __declspec(dllexport)
#else
#define NEGSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum negsim_status {
    NEGSIM_OK = 0,
    NEGSIM_ERR_INVALID_ARGUMENT = 1,
    NEGSIM_ERR_PARSE = 2,
    NEGSIM_ERR_VALIDATION = 3,
    NEGSIM_ERR_CONFIG = 4,
    NEGSIM_ERR_IO = 5,
    NEGSIM_ERR_EMPTY_INPUT = 6,
    NEGSIM_ERR_BACKEND = 7,
    NEGSIM_ERR_AUTH = 8,
    NEGSIM_ERR_SCRIPT_EXHAUSTED = 9,
    NEGSIM_ERR_EXTRACTION = 10,
    NEGSIM_ERR_CACHE_MISS = 11,
    NEGSIM_ERR_DOMAIN = 12,
    NEGSIM_ERR_INTERNAL = 13
} negsim_status;

/* Message of the last failing call on this thread; "" after success. */
NEGSIM_API const char* negsim_last_error(void);
NEGSIM_API const char* negsim_status_name(negsim_status status);
NEGSIM_API const char* negsim_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
NEGSIM_API void negsim_free_string(char* s);

/* ---- scenarios ---- */

typedef struct negsim_scenario negsim_scenario;

NEGSIM_API negsim_status negsim_scenario_load(const char* path, negsim_scenario** out);
NEGSIM_API negsim_status negsim_scenario_parse(const char* text, negsim_scenario** out);
NEGSIM_API void negsim_scenario_free(negsim_scenario* s);
NEGSIM_API const char* negsim_scenario_id(const negsim_scenario* s);
NEGSIM_API size_t negsim_scenario_party_count(const negsim_scenario* s);
NEGSIM_API size_t negsim_scenario_topic_count(const negsim_scenario* s);
/* Canonical serialization. */
NEGSIM_API negsim_status negsim_scenario_serialize(const negsim_scenario* s, char** out);

/* Lists every violation (one tab-separated line each) into *report and sets
 * *error_count. Returns NEGSIM_OK even when the file has violations; a file
 * that cannot be read or parsed fails. */
NEGSIM_API negsim_status negsim_validate_file(const char* path, char** report, int* error_count);

/* ---- sessions ---- */

typedef struct negsim_session negsim_session;

/* config_json may be NULL for defaults. base_dir resolves relative paths in
 * the configuration (NULL = working directory). */
NEGSIM_API negsim_status negsim_session_create(const char* config_json, const char* base_dir, negsim_session** out);
NEGSIM_API void negsim_session_destroy(negsim_session* session);

/* Adds a backend from "scripted:PATH" or "http:URL#model"; replaces a
 * configured backend with the same id. */
NEGSIM_API negsim_status negsim_session_add_backend(negsim_session* session, const char* id, const char* shorthand);

/* Applies a JSON object of run settings over the session's run config. */
NEGSIM_API negsim_status negsim_session_set_run(negsim_session* session, const char* run_json);

/* Effective configuration as JSON. */
NEGSIM_API negsim_status negsim_session_config(const negsim_session* session, char** out);

/* Runs a batch; *summary receives a JSON object {"transcripts": [...],
 * "summaries": [...], "warnings": [...], "truncated": n}. */
NEGSIM_API negsim_status negsim_run(negsim_session* session, const char* scenario_path, const char* out_dir,
                                    char** summary);

/* Evaluates transcripts. out_dir and cache_path may be NULL. *summary
 * receives {"written": [...], "reports": [...], "warnings": [...],
 * "gateway_calls": n}. */
NEGSIM_API negsim_status negsim_evaluate(negsim_session* session, const char* const* transcripts, size_t count,
                                         const char* out_dir, const char* cache_path, char** summary);

/* ---- reports ---- */

/* Summary table over report files or directories. */
NEGSIM_API negsim_status negsim_report(const char* const* paths, size_t count, char** table);

/* Flat plotting table from a series file. */
NEGSIM_API negsim_status negsim_plot_data(const char* series_path, char** table);

/* ---- metric primitives ---- */

NEGSIM_API int negsim_turn_budget(size_t parties, size_t topics, int override_budget /* <= 0: none */);

/* values are turns 1..T */
NEGSIM_API negsim_status negsim_consensus_change(const double* values, size_t n, int window, double* out);
NEGSIM_API negsim_status negsim_fit_slope(const double* x, const double* y, size_t n, double* out);
NEGSIM_API negsim_status negsim_spearman(const double* x, const double* y, size_t n, double* rho, double* p);

/* Drop events as a JSON array of {start_turn, trigger_turn, magnitude}. */
NEGSIM_API negsim_status negsim_detect_drops(const double* values, size_t n, double tau, int window, char** out);

/* scores: four values in 1..5 or -1. *defined is 0 when none apply. */
NEGSIM_API negsim_status negsim_mi_mean(const int* scores, double* out, int* defined);

#ifdef __cplusplus
}
#endif

#endif

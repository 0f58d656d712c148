#ifndef WECFARM_H
#define WECFARM_H

/* C interface to libwecfarm. Structured inputs and outputs are JSON text;
 * strings returned through char** are owned by the caller and released with
 * wf_string_free. On failure the message is available from wf_last_error()
 * on the calling thread until the next call on that thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WF_API __declspec(dllexport)
#else
#define WF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wf_status {
  WF_OK = 0,
  WF_ERR_VALIDATION = 1,
  WF_ERR_GEOMETRY = 2,
  WF_ERR_DIMENSION = 3,
  WF_ERR_DEGENERATE = 4,
  WF_ERR_CONFIG = 5,
  WF_ERR_PARSE = 6,
  WF_ERR_IO = 7,
  WF_ERR_NUMERICAL = 8,
  WF_ERR_SINGULAR = 9,
  WF_ERR_INTERNAL = 10
} wf_status;

typedef struct wf_site wf_site;
typedef struct wf_provider wf_provider;
typedef struct wf_evaluator wf_evaluator;

/* progress lines (training) and per-generation records (GA, JSON) */
typedef void (*wf_message_fn)(const char* text, void* user);

WF_API const char* wf_version(void);
WF_API const char* wf_status_name(wf_status status);
WF_API const char* wf_last_error(void);
WF_API void wf_string_free(char* s);

/* 64-bit FNV-1a of a byte range */
WF_API uint64_t wf_fnv1a64(const void* data, size_t size);

/* ---- sites ---------------------------------------------------------- */

/* options_json: {"n_gq", "years", "bandwidth_scale", "min_records",
 * "bounds": {"hs_min", "hs_max", "tp_min", "tp_max"}}; NULL for defaults */
WF_API wf_status wf_site_build(const char* records_csv_path, const char* site_id,
                               const char* options_json, wf_site** out);
WF_API wf_status wf_site_load(const char* path, wf_site** out);
WF_API wf_status wf_site_save(const wf_site* site, const char* path);
WF_API void wf_site_free(wf_site* site);
/* site_id, grid nodes, bandwidths, record count and the probability matrix
 * averaged over years */
WF_API wf_status wf_site_summary(const wf_site* site, char** json);

/* Synthetic (hs, tp) record CSV for one of the built-in profiles. */
WF_API wf_status wf_synthetic_records(const char* profile, size_t count, uint64_t seed,
                                      const char* csv_path);

/* ---- coefficient providers ----------------------------------------- */

WF_API wf_status wf_provider_reference(wf_provider** out);
WF_API wf_status wf_provider_surrogate(const char* model_dir, int haskind_projection,
                                       wf_provider** out);
WF_API void wf_provider_free(wf_provider* provider);
WF_API const char* wf_provider_name(const wf_provider* provider);

/* request_json: {"radius", "slenderness", "frequency", "environment"} and,
 * for pairs, {"separation", "heading"} */
WF_API wf_status wf_hydro_single(const wf_provider* provider, const char* request_json,
                                 char** json);
WF_API wf_status wf_hydro_pair(const wf_provider* provider, const char* request_json,
                               char** json);

/* Text record of every constant used by the reference model. */
WF_API wf_status wf_model_ledger(const char* config_json, char** text);

/* ---- surrogate ------------------------------------------------------ */

/* plan_json: training plan (see README); writes one committee file per map
 * into out_dir and returns a per-map report including the MSE maps. */
WF_API wf_status wf_surrogate_train(const char* plan_json, const char* out_dir,
                                    unsigned threads, wf_message_fn progress, void* user,
                                    char** report_json);
/* Validates the committees in model_dir on their tensor grids against the
 * reference provider. options_json: {"grid_single", "grid_pair", "maps",
 * "cheating"}; cheating replaces each committee with the oracle itself. */
WF_API wf_status wf_surrogate_validate(const char* model_dir, const char* options_json,
                                       unsigned threads, char** report_json);

/* ---- evaluation ----------------------------------------------------- */

/* config_json: {"frequency", "environment", "efficiency", "bounds", "seed",
 * "config_hash"}; every key optional. The evaluator keeps references to
 * provider and copies the site. */
WF_API wf_status wf_evaluator_create(const wf_provider* provider, const wf_site* site,
                                     const char* config_json, wf_evaluator** out);
WF_API void wf_evaluator_free(wf_evaluator* evaluator);

/* design_json: {"radius", "slenderness", "pto": {"stiffness", "damping"},
 * "layout": [[x, y], ...], "site_id"}; stiffness/damping are a number
 * (shared) or an array (per device). */
WF_API wf_status wf_evaluate(const wf_evaluator* evaluator, const char* design_json,
                             int with_q, char** result_json);

/* study_json: {"study", "devices", "fixed_control", "ga", "bounds", "inject",
 * "polish", "polish_evaluations"}. progress receives one JSON object per
 * generation. */
WF_API wf_status wf_optimize(const wf_evaluator* evaluator, const char* study_json,
                             unsigned threads, wf_message_fn progress, void* user,
                             char** result_json);

WF_API wf_status wf_benchmark(const wf_evaluator* reference, const wf_evaluator* surrogate,
                              size_t samples, size_t devices, uint64_t seed, unsigned threads,
                              char** report_json);

WF_API wf_status wf_random_layouts(const wf_evaluator* evaluator, const char* design_json,
                                   size_t samples, uint64_t seed, unsigned threads,
                                   char** report_json);

WF_API wf_status wf_sensitivity(const wf_evaluator* evaluator, const char* design_json,
                                size_t wec_index, int resolution, double window,
                                unsigned threads, char** report_json);

#ifdef __cplusplus
}
#endif

#endif

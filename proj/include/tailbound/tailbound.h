/* C interface to the tailbound library. All JSON strings are UTF-8. */
#ifndef TAILBOUND_H
#define TAILBOUND_H

#include <stddef.h>
#include <stdint.h>

#if defined(TAILBOUND_BUILDING_LIBRARY)
#define TB_API __attribute__((visibility("default")))
#else
#define TB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. TB_USAGE..TB_VIOLATION double as CLI exit codes. */
enum {
  TB_OK = 0,
  TB_USAGE = 1,     /* bad arguments or config */
  TB_NO_INDEX = 2,  /* no Cramer index (M <= 1 a.s., E log M >= 0, M = 1 a.s.) */
  TB_VIOLATION = 3, /* a checked property or assertion failed */
  TB_ERROR = 4      /* runtime failure (divergence, I/O, ...) */
};

typedef struct tb_model tb_model;
typedef struct tb_sample_set tb_sample_set;

TB_API const char* tb_version(void);
/* Message for the last non-OK status on this thread; "" when none. */
TB_API const char* tb_last_error(void);
/* Frees strings returned through char** out parameters. */
TB_API void tb_free_string(char* s);

/* JSON array of registered model ids. */
TB_API int tb_list_models(char** out_json);

/* law_json: {"kind": "two_point", "a":..., "b":..., "p":...} or lognormal etc.
   options_json may be NULL: {"tol", "kappa_max", "monte_carlo", "mc_samples", "seed"}. */
TB_API int tb_solve_kappa(const char* law_json, const char* options_json, char** out_json);

TB_API int tb_model_create(const char* model_id, const char* params_json, tb_model** out);
TB_API void tb_model_free(tb_model* model);
/* Normalized parameters and family description. */
TB_API int tb_model_describe(const tb_model* model, char** out_json);

/* mode_json may be NULL (backward, automatic depth). */
TB_API int tb_sample(const tb_model* model, const char* mode_json, size_t n, uint64_t seed, tb_sample_set** out);
TB_API void tb_sample_set_free(tb_sample_set* s);
TB_API size_t tb_sample_set_size(const tb_sample_set* s);
/* Copies min(cap, size) values in draw order. */
TB_API int tb_sample_set_values(const tb_sample_set* s, double* out, size_t cap);
TB_API int tb_hill(const tb_sample_set* s, size_t k, char** out_json);

/* options_json: {"r", "envs", "points", "seed", "depths", "corrupt"}.
   Returns TB_VIOLATION (with the report in out_json) when violations are found. */
TB_API int tb_sandwich_verify(const tb_model* model, const char* options_json, char** out_json);

/* Runs an experiment config; the report is returned even when an assertion
   fails (status TB_VIOLATION). */
TB_API int tb_run_config(const char* config_json, char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif

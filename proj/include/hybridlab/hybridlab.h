/* C interface to the hybridlab core. All functions return an hl_status; on
 * failure hl_last_error() describes the most recent error on the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * hl_string_free. */
#ifndef HYBRIDLAB_H
#define HYBRIDLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(HYBRIDLAB_BUILDING)
#define HL_API __attribute__((visibility("default")))
#else
#define HL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hl_status {
    HL_OK = 0,
    HL_INVALID_ARGUMENT = 1,
    HL_REDUCIBLE_CHAIN = 2,
    HL_INCONSISTENT_RHS = 3,
    HL_MAJORANT_VIOLATION = 4,
    HL_CONFIG_MISSING_FILE = 5,
    HL_CONFIG_PARSE = 6,
    HL_CONFIG_VALIDATION = 7,
    HL_IO = 8,
    HL_INTERNAL = 9
} hl_status;

typedef struct hl_config hl_config;
typedef struct hl_model hl_model;

typedef struct hl_run_options {
    uint64_t seed;
    int jobs;            /* <= 0: available parallelism */
    const char* out_dir; /* NULL: output.dir from the config */
    int stride;          /* <= 0: output.stride from the config */
    int plot;            /* nonzero forces the SVG plot on */
} hl_run_options;

/* "ok", "invalid-argument", ... */
HL_API const char* hl_status_name(hl_status status);
HL_API const char* hl_last_error(void);
HL_API void hl_string_free(char* s);

HL_API hl_status hl_config_load(const char* path, hl_config** out);
HL_API hl_status hl_config_parse(const char* text, hl_config** out);
HL_API void hl_config_free(hl_config* config);
HL_API hl_status hl_config_model(const hl_config* config, hl_model** out);

/* States (C, O); c and v hold two entries each. */
HL_API hl_status hl_model_two_state(double opening, double closing, const double* c, const double* v, hl_model** out);
HL_API hl_status hl_model_default(hl_model** out);
HL_API void hl_model_free(hl_model* model);
HL_API int hl_model_num_states(const hl_model* model);
/* nu must hold hl_model_num_states entries. */
HL_API hl_status hl_model_stationary(const hl_model* model, double zeta, double* nu, size_t len);

HL_API hl_status hl_psi(double x, double* out);
/* c holds C1..C5; scalings are the defaults N, N^1.5, N^3, N^3. */
HL_API hl_status hl_tail_bound(double delta, double epsilon, int population, double p0, const double* c, double* out);
/* CSV "x,psi" on points equally spaced in [0, max]. */
HL_API hl_status hl_psi_table(double max, int points, char** csv);

/* One hybrid trajectory for the first (eps, N) pair: <out>/trajectory.csv */
HL_API hl_status hl_run_simulate(const hl_config* config, const hl_run_options* options, char** path);
/* Averaged (first N) or limit solution per experiment.target: <out>/average.csv */
HL_API hl_status hl_run_average(const hl_config* config, const hl_run_options* options, char** path);
/* Ensemble: sweep_errors.csv, sweep_summary.csv, sweep_tail.csv and optionally
 * sweep_plot.svg under <out>. summary (may be NULL) receives a text digest. */
HL_API hl_status hl_run_sweep(const hl_config* config, const hl_run_options* options, char** summary);
/* scaling.csv and scaling_meta.jsonl under <out>. */
HL_API hl_status hl_run_poisson_check(const hl_config* config, const hl_run_options* options, char** summary);
/* Invariant suite on the configured model; all_passed receives 0 or 1. */
HL_API hl_status hl_run_validate(const hl_config* config, const hl_run_options* options, char** report,
                                 int* all_passed);

#ifdef __cplusplus
}
#endif

#endif

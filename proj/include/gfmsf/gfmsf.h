#ifndef GFMSF_H
#define GFMSF_H

/* C interface to the simulation and verification core. Every function that can
 * fail returns a gfmsf_status; on failure gfmsf_last_error() describes it (per
 * thread, valid until the next call on that thread). Handles are opaque and
 * owned by the caller once returned. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GFMSF_BUILDING)
#    define GFMSF_API __declspec(dllexport)
#  else
#    define GFMSF_API __declspec(dllimport)
#  endif
#else
#  define GFMSF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gfmsf_status {
    GFMSF_OK = 0,
    GFMSF_E_INVALID_ARGUMENT = 1,
    GFMSF_E_SINGULAR_IMPEDANCE = 2,
    GFMSF_E_DEGENERATE_CBF = 3,
    GFMSF_E_PARSE = 4,
    GFMSF_E_INVALID_CONFIG = 5,
    GFMSF_E_IO = 6,
    GFMSF_E_NUMERIC_BLOWUP = 7,
    GFMSF_E_CERTIFICATE = 8,
    GFMSF_E_INTERNAL = 99
} gfmsf_status;

typedef struct gfmsf_config gfmsf_config;
typedef struct gfmsf_certs gfmsf_certs;
typedef struct gfmsf_result gfmsf_result;
typedef struct gfmsf_report gfmsf_report;

typedef struct gfmsf_metrics {
    double max_phase_current;
    double max_overshoot;
    double max_dv;
    double int_dv;
    double recovery_time; /* -1 when V never settles at or below 0 after clearing */
    double post_fault_p_dip;
    double active_time_post_fault;
    double max_dv_prefault;
    int stable;
} gfmsf_metrics;

typedef struct gfmsf_verify_options {
    uint64_t samples;
    uint64_t seed;
    double band;
    int negated_region; /* nonzero: operational region with every f_op row negated */
} gfmsf_verify_options;

/* Condition indices for gfmsf_report_count; GFMSF_COND_ALL sums them. */
enum {
    GFMSF_COND_CBF_BOUNDARY = 0,
    GFMSF_COND_CLF_REGION = 1,
    GFMSF_COND_CLF_CBF_JOINT = 2,
    GFMSF_COND_NOMINAL_INVARIANCE = 3,
    GFMSF_COND_CONTAINMENT_XN_XS = 4,
    GFMSF_COND_CONTAINMENT_XS_XA = 5,
    GFMSF_COND_ALL = -1
};

GFMSF_API const char* gfmsf_version(void);
GFMSF_API const char* gfmsf_last_error(void);
GFMSF_API const char* gfmsf_status_name(gfmsf_status status);

GFMSF_API gfmsf_status gfmsf_config_new(gfmsf_config** out);
GFMSF_API gfmsf_status gfmsf_config_load(const char* path, gfmsf_config** out);
GFMSF_API gfmsf_status gfmsf_config_parse(const char* text, gfmsf_config** out);
GFMSF_API gfmsf_status gfmsf_config_clone(const gfmsf_config* cfg, gfmsf_config** out);
/* Same keys and value syntax as a config file line. */
GFMSF_API gfmsf_status gfmsf_config_set(gfmsf_config* cfg, const char* key, const char* value);
GFMSF_API gfmsf_status gfmsf_config_validate(const gfmsf_config* cfg);
/* Copies "grid_gfm_clc" into buf; *needed (optional) receives the length without the terminator. */
GFMSF_API gfmsf_status gfmsf_config_name(const gfmsf_config* cfg, char* buf, size_t cap, size_t* needed);
GFMSF_API size_t gfmsf_config_param_count(void);
/* *key stays valid for the life of the process. */
GFMSF_API gfmsf_status gfmsf_config_param(const gfmsf_config* cfg, size_t index, const char** key, double* value);
GFMSF_API void gfmsf_config_free(gfmsf_config* cfg);

/* The 24 grid x GFM x CLC combinations built on base (NULL: defaults). */
GFMSF_API size_t gfmsf_matrix_size(void);
GFMSF_API gfmsf_status gfmsf_matrix_config(const gfmsf_config* base, size_t index, gfmsf_config** out);

GFMSF_API gfmsf_status gfmsf_certs_builtin(gfmsf_certs** out);
GFMSF_API gfmsf_status gfmsf_certs_load(const char* cbf_path, const char* clf_path, gfmsf_certs** out);
GFMSF_API gfmsf_status gfmsf_certs_eval(const gfmsf_certs* certs, const double point[7], double* b, double* v);
GFMSF_API void gfmsf_certs_free(gfmsf_certs* certs);

/* certs may be NULL for the built-in certificates. */
GFMSF_API gfmsf_status gfmsf_run(const gfmsf_config* cfg, const gfmsf_certs* certs, gfmsf_result** out);
GFMSF_API gfmsf_status gfmsf_result_metrics(const gfmsf_result* res, gfmsf_metrics* out);
GFMSF_API size_t gfmsf_result_length(const gfmsf_result* res);
/* Row of the trace in CSV column order (15 values). */
GFMSF_API gfmsf_status gfmsf_result_row(const gfmsf_result* res, size_t index, double row[15]);
GFMSF_API gfmsf_status gfmsf_result_write_csv(const gfmsf_result* res, const char* path);
GFMSF_API void gfmsf_result_free(gfmsf_result* res);

GFMSF_API gfmsf_status gfmsf_compare_clf(const gfmsf_config* cfg, const gfmsf_certs* certs,
                                         gfmsf_metrics* with_clf, gfmsf_metrics* without_clf);

GFMSF_API void gfmsf_verify_options_default(gfmsf_verify_options* opts);
/* cfg supplies the parameters (NULL: defaults); certs may be NULL. */
GFMSF_API gfmsf_status gfmsf_verify(const gfmsf_config* cfg, const gfmsf_certs* certs,
                                    const gfmsf_verify_options* opts, gfmsf_report** out);
GFMSF_API uint64_t gfmsf_report_samples(const gfmsf_report* rep);
GFMSF_API uint64_t gfmsf_report_points_checked(const gfmsf_report* rep);
GFMSF_API uint64_t gfmsf_report_count(const gfmsf_report* rep, int condition);
GFMSF_API gfmsf_status gfmsf_report_write(const gfmsf_report* rep, const char* path);
GFMSF_API void gfmsf_report_free(gfmsf_report* rep);

/* Worst phase amplitude over an n_theta x n_phi grid; see check_abc_bound. */
GFMSF_API gfmsf_status gfmsf_abc_bound(int n_theta, int n_phi, double i_hat, double i_0, double* max_phase);

#ifdef __cplusplus
}
#endif

#endif

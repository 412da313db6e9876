#ifndef SCLE_SCLE_H
#define SCLE_SCLE_H

/* C interface to the sparse composite likelihood library. Every object is an
 * opaque handle released with its _free function. Functions return a status;
 * on failure scle_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * scle_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCLE_API __declspec(dllexport)
#else
#define SCLE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scle_status {
    SCLE_OK = 0,
    SCLE_ERR_CONFIG = 1,
    SCLE_ERR_INPUT = 2,
    SCLE_ERR_EVALUATION = 3,
    SCLE_ERR_MODEL = 4,
    SCLE_ERR_SINGULAR = 5,
    SCLE_ERR_CONVERGENCE = 6,
    SCLE_ERR_ESTIMATION = 7,
    SCLE_ERR_PATH = 8,
    SCLE_ERR_DEGENERATE = 9,
    SCLE_ERR_IO = 10,
    SCLE_ERR_INTERNAL = 99
} scle_status;

typedef struct scle_config scle_config;
typedef struct scle_data scle_data;
typedef struct scle_model scle_model;
typedef struct scle_gram scle_gram;
typedef struct scle_path scle_path;
typedef struct scle_fit scle_fit;

SCLE_API const char* scle_last_error(void);
SCLE_API const char* scle_status_name(scle_status status);
/* 1 for failures of the numerics (singular systems, divergence, ...), 0 for
 * usage, configuration and I/O problems. */
SCLE_API int scle_status_is_numerical(scle_status status);
SCLE_API const char* scle_version(void);
SCLE_API void scle_string_free(char* s);

/* ---- config-driven runs ---- */

SCLE_API scle_status scle_config_new(scle_config** out);
SCLE_API scle_status scle_config_from_file(const char* path, scle_config** out);
SCLE_API scle_status scle_config_from_string(const char* json, scle_config** out);
/* "a.b.c=value"; value is JSON when it parses, otherwise a string. */
SCLE_API scle_status scle_config_set(scle_config* cfg, const char* assignment);
/* Resolved config (defaults materialized) as JSON text. */
SCLE_API scle_status scle_config_resolved(const scle_config* cfg, char** json_out);
/* Diagnostics as newline-separated text; *count = 0 means valid. command may
 * be NULL to use the config's own "command" field. */
SCLE_API scle_status scle_config_validate(const scle_config* cfg, const char* command,
                                          char** diagnostics, size_t* count);
/* Runs fit | path | are | simulate | covariance and writes artifacts plus
 * manifest.json into out_dir. format is "csv", "json" or NULL (config value).
 * threads caps worker count without changing results. */
SCLE_API scle_status scle_run(const scle_config* cfg, const char* command, const char* out_dir,
                              const char* format, int threads, char** summary);
SCLE_API void scle_config_free(scle_config* cfg);

/* ---- data ---- */

/* Row-major n x d values. */
SCLE_API scle_status scle_data_from_array(const double* values, size_t n, size_t d,
                                          scle_data** out);
SCLE_API scle_status scle_data_from_csv(const char* path, scle_data** out);
SCLE_API size_t scle_data_rows(const scle_data* data);
SCLE_API size_t scle_data_cols(const scle_data* data);
SCLE_API void scle_data_free(scle_data* data);

/* ---- models ---- */

/* rho may be NaN to take the kind's default. */
SCLE_API scle_status scle_model_builtin(const char* family, const char* covariance_kind, int dim,
                                        double rho, double theta, scle_model** out);
/* Writes the m x p partial scores (row-major, row j = u_j) for one data row.
 * Returns 0 on success. */
typedef int (*scle_score_fn)(void* user, const double* theta, size_t p, const double* row,
                             size_t d, double* out);
/* Writes the m stacked p x p derivative blocks, row-major (m*p rows). May be
 * NULL, in which case central differences are used. */
typedef int (*scle_deriv_fn)(void* user, const double* theta, size_t p, const double* row,
                             size_t d, double* out);
SCLE_API scle_status scle_model_custom(int p, int m, int d, scle_score_fn score,
                                       scle_deriv_fn deriv, void* user, scle_model** out);
SCLE_API int scle_model_p(const scle_model* model);
SCLE_API int scle_model_m(const scle_model* model);
/* Covariance of a built-in model at its true parameter, row-major d x d. */
SCLE_API scle_status scle_model_covariance(const scle_model* model, double* out);
/* Samples n rows of a built-in model's distribution. */
SCLE_API scle_status scle_model_sample(const scle_model* model, size_t n, uint64_t seed,
                                       scle_data** out);
SCLE_API void scle_model_free(scle_model* model);

/* ---- T-Step ---- */

SCLE_API scle_status scle_gram_from_array(const double* values, size_t m, int n_obs, int p,
                                          scle_gram** out);
SCLE_API scle_status scle_gram_empirical(const scle_model* model, const double* theta,
                                         const scle_data* data, scle_gram** out);
SCLE_API scle_status scle_gram_population(const scle_model* model, scle_gram** out);
SCLE_API size_t scle_gram_dim(const scle_gram* gram);
SCLE_API scle_status scle_gram_values(const scle_gram* gram, double* out);
SCLE_API scle_status scle_gram_lambda_max(const scle_gram* gram, double* out);
SCLE_API void scle_gram_free(scle_gram* gram);

/* Fixed-lambda solution with unit penalty weights; w_out has m entries. */
SCLE_API scle_status scle_tstep_solve(const scle_gram* gram, double lambda, double* w_out);
SCLE_API scle_status scle_path_solve(const scle_gram* gram, double lambda_min, scle_path** out);
SCLE_API size_t scle_path_size(const scle_path* path);
/* Any output pointer may be NULL. w_out has m entries. */
SCLE_API scle_status scle_path_breakpoint(const scle_path* path, size_t k, double* lambda,
                                          double* w_out, size_t* active_count);
SCLE_API scle_status scle_path_select(const scle_path* path, const scle_gram* gram, double tau,
                                      double lambda_budget, double* lambda, double* phi,
                                      size_t* active_count);
SCLE_API scle_status scle_path_to_csv(const scle_path* path, char** csv);
SCLE_API void scle_path_free(scle_path* path);

/* ---- estimation ---- */

/* init may be NULL (zeros for custom models, the true value for built-ins). */
SCLE_API scle_status scle_fit_run(const scle_model* model, const scle_data* data, double tau,
                                  double lambda_budget, int refine_rounds, const double* init,
                                  scle_fit** out);
/* theta and se have p entries; either may be NULL. */
SCLE_API scle_status scle_fit_estimate(const scle_fit* fit, double* theta, double* se);
SCLE_API double scle_fit_lambda(const scle_fit* fit);
SCLE_API double scle_fit_phi(const scle_fit* fit);
SCLE_API size_t scle_fit_active_count(const scle_fit* fit);
/* weights_out has m entries. */
SCLE_API scle_status scle_fit_weights(const scle_fit* fit, double* weights_out);
SCLE_API scle_status scle_fit_to_json(const scle_fit* fit, char** json);
SCLE_API void scle_fit_free(scle_fit* fit);

#ifdef __cplusplus
}
#endif

#endif

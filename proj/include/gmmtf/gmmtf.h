#ifndef GMMTF_GMMTF_H
#define GMMTF_GMMTF_H

#include <stddef.h>
#include <stdint.h>

#if defined(GMMTF_BUILDING_LIBRARY)
#define GMMTF_API __attribute__((visibility("default")))
#else
#define GMMTF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gmmtf_status {
  GMMTF_OK = 0,
  GMMTF_ERR_INVALID_ARGUMENT = 1,
  GMMTF_ERR_SAMPLING_EXHAUSTED = 2,
  GMMTF_ERR_DEGENERATE_COMPONENT = 3,
  GMMTF_ERR_RANK = 4,
  GMMTF_ERR_DECOMPOSITION = 5,
  GMMTF_ERR_CAPACITY = 6,
  GMMTF_ERR_OVERFLOW = 7,
  GMMTF_ERR_IO = 8,
  GMMTF_ERR_INTERNAL = 9
} gmmtf_status;

typedef struct gmmtf_task gmmtf_task;
typedef struct gmmtf_params gmmtf_params;

/* Message of the last failed call on this thread ("" if none). */
GMMTF_API const char* gmmtf_last_error(void);
GMMTF_API const char* gmmtf_status_name(gmmtf_status status);
GMMTF_API const char* gmmtf_version(void);

/* Strings returned through char** are owned by the caller. */
GMMTF_API void gmmtf_string_free(char* s);

/* Tasks */

/* One task with exactly n samples; means and weights follow the default
   sampler (cube half-width 5, cosine filter 0.8, weights in [0.2, 0.8]). */
GMMTF_API gmmtf_status gmmtf_task_sample(int d, int k, int n, uint64_t seed,
                                         int anisotropic, gmmtf_task** out);
/* `count` tasks from the sampler (K uniform over k_set, N uniform on
   [ceil(n_max/2), n_max]); task i uses stream i of `seed`. JSON array. */
GMMTF_API gmmtf_status gmmtf_sample_tasks_json(int d, const int* k_set, size_t k_count,
                                               int n_max, int anisotropic, uint64_t seed,
                                               int count, char** out_json);
GMMTF_API gmmtf_status gmmtf_task_from_json(const char* json, gmmtf_task** out);
GMMTF_API gmmtf_status gmmtf_task_to_json(const gmmtf_task* task, char** out_json);
GMMTF_API void gmmtf_task_free(gmmtf_task* task);
GMMTF_API int gmmtf_task_dim(const gmmtf_task* task);
GMMTF_API int gmmtf_task_k(const gmmtf_task* task);
GMMTF_API int gmmtf_task_n(const gmmtf_task* task);
GMMTF_API gmmtf_status gmmtf_task_truth(const gmmtf_task* task, gmmtf_params** out);

/* Solvers: "em", "spectral", "tf-em". `init` ("random", "kmeanspp",
   "oracle") applies to em and tf-em; NULL means kmeanspp. */
GMMTF_API gmmtf_status gmmtf_solve(const gmmtf_task* task, const char* solver,
                                   const char* init, uint64_t seed, gmmtf_params** out);

/* Parameters */

GMMTF_API int gmmtf_params_k(const gmmtf_params* params);
GMMTF_API int gmmtf_params_dim(const gmmtf_params* params);
/* `out` receives K weights. */
GMMTF_API gmmtf_status gmmtf_params_weights(const gmmtf_params* params, double* out,
                                            size_t len);
/* `out` receives K x d means, row-major. */
GMMTF_API gmmtf_status gmmtf_params_means(const gmmtf_params* params, double* out,
                                          size_t len);
GMMTF_API gmmtf_status gmmtf_params_to_json(const gmmtf_params* params, char** out_json);
GMMTF_API void gmmtf_params_free(gmmtf_params* params);

/* l2 error against the task truth, clustering accuracy (NaN without labels)
   and average log-likelihood. Any output pointer may be NULL. */
GMMTF_API gmmtf_status gmmtf_evaluate(const gmmtf_task* task, const gmmtf_params* est,
                                      double* l2_error, double* accuracy,
                                      double* log_likelihood);

/* Harness */

/* `config_text` is a flat key = value file body (NULL for defaults). Writes
   report.<format> and summary.json into out_dir; summary_json may be NULL. */
GMMTF_API gmmtf_status gmmtf_bench_run(const char* config_text, const char* out_dir,
                                       const char* format, char** summary_json);

GMMTF_API gmmtf_status gmmtf_verify_constructions(double delta, int layers, int d0, int k0,
                                                  uint64_t seed, int* passed,
                                                  char** report_json);

#ifdef __cplusplus
}
#endif

#endif

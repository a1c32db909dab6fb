#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "gmmtf/gmmtf.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_sample_and_solve(void) {
  gmmtf_task* task = NULL;
  EXPECT(gmmtf_task_sample(3, 2, 4000, 11, 0, &task) == GMMTF_OK);
  EXPECT(gmmtf_task_dim(task) == 3);
  EXPECT(gmmtf_task_k(task) == 2);
  EXPECT(gmmtf_task_n(task) == 4000);

  gmmtf_task* small = NULL;
  EXPECT(gmmtf_task_sample(3, 2, 1000, 11, 0, &small) == GMMTF_OK);
  const char* solvers[] = {"em", "spectral", "tf-em"};
  for (int i = 0; i < 3; ++i) {
    const gmmtf_task* t = i == 2 ? small : task;
    gmmtf_params* est = NULL;
    EXPECT(gmmtf_solve(t, solvers[i], NULL, 5, &est) == GMMTF_OK);
    EXPECT(gmmtf_params_k(est) == 2);
    EXPECT(gmmtf_params_dim(est) == 3);
    double w[2], means[6];
    EXPECT(gmmtf_params_weights(est, w, 2) == GMMTF_OK);
    EXPECT(fabs(w[0] + w[1] - 1.0) < 1e-6);
    EXPECT(gmmtf_params_means(est, means, 6) == GMMTF_OK);
    EXPECT(gmmtf_params_means(est, means, 5) == GMMTF_ERR_INVALID_ARGUMENT);
    double l2 = -1.0, acc = -1.0, ll = 0.0;
    EXPECT(gmmtf_evaluate(t, est, &l2, &acc, &ll) == GMMTF_OK);
    EXPECT(l2 >= 0.0 && l2 < 0.05);
    EXPECT(acc > 0.5 && acc <= 1.0);
    EXPECT(isfinite(ll));
    EXPECT(gmmtf_evaluate(t, est, NULL, NULL, NULL) == GMMTF_OK);
    char* json = NULL;
    EXPECT(gmmtf_params_to_json(est, &json) == GMMTF_OK);
    EXPECT(json != NULL && strstr(json, "means") != NULL);
    gmmtf_string_free(json);
    gmmtf_params_free(est);
  }

  gmmtf_params* est = NULL;
  EXPECT(gmmtf_solve(task, "em", "oracle", 1, &est) == GMMTF_OK);
  gmmtf_params_free(est);
  est = NULL;
  EXPECT(gmmtf_solve(task, "magic", NULL, 1, &est) == GMMTF_ERR_INVALID_ARGUMENT);
  EXPECT(est == NULL);
  EXPECT(strlen(gmmtf_last_error()) > 0);

  gmmtf_params* truth = NULL;
  EXPECT(gmmtf_task_truth(task, &truth) == GMMTF_OK);
  double l2 = -1.0;
  EXPECT(gmmtf_evaluate(task, truth, &l2, NULL, NULL) == GMMTF_OK);
  EXPECT(l2 == 0.0);
  gmmtf_params_free(truth);
  gmmtf_task_free(small);
  gmmtf_task_free(task);
}

static void test_json_round_trip(void) {
  gmmtf_task* task = NULL;
  EXPECT(gmmtf_task_sample(2, 3, 50, 3, 1, &task) == GMMTF_OK);
  char* json = NULL;
  EXPECT(gmmtf_task_to_json(task, &json) == GMMTF_OK);
  gmmtf_task* back = NULL;
  EXPECT(gmmtf_task_from_json(json, &back) == GMMTF_OK);
  char* again = NULL;
  EXPECT(gmmtf_task_to_json(back, &again) == GMMTF_OK);
  EXPECT(json && again && strcmp(json, again) == 0);
  gmmtf_string_free(json);
  gmmtf_string_free(again);
  gmmtf_task_free(back);
  gmmtf_task_free(task);

  back = NULL;
  EXPECT(gmmtf_task_from_json("{not json", &back) == GMMTF_ERR_IO);
  EXPECT(back == NULL);

  const int ks[] = {2, 3};
  char* many = NULL;
  EXPECT(gmmtf_sample_tasks_json(4, ks, 2, 40, 0, 9, 5, &many) == GMMTF_OK);
  EXPECT(many != NULL && many[0] == '[');
  char* same = NULL;
  EXPECT(gmmtf_sample_tasks_json(4, ks, 2, 40, 0, 9, 5, &same) == GMMTF_OK);
  EXPECT(many && same && strcmp(many, same) == 0);
  gmmtf_string_free(many);
  gmmtf_string_free(same);
}

static void test_errors(void) {
  gmmtf_task* task = NULL;
  EXPECT(gmmtf_task_sample(0, 2, 10, 1, 0, &task) == GMMTF_ERR_INVALID_ARGUMENT);
  EXPECT(gmmtf_task_sample(2, 2, 10, 1, 0, NULL) == GMMTF_ERR_INVALID_ARGUMENT);
  EXPECT(gmmtf_task_sample(2, 5, 200, 1, 0, &task) == GMMTF_OK);
  gmmtf_params* est = NULL;
  EXPECT(gmmtf_solve(task, "spectral", NULL, 1, &est) == GMMTF_ERR_RANK);
  EXPECT(strcmp(gmmtf_status_name(GMMTF_ERR_RANK), "rank-error") == 0);
  gmmtf_task_free(task);
  gmmtf_task_free(NULL);
  gmmtf_params_free(NULL);
  gmmtf_string_free(NULL);
  EXPECT(strlen(gmmtf_version()) > 0);
}

static void test_harness(void) {
  int passed = 0;
  char* report = NULL;
  EXPECT(gmmtf_verify_constructions(1e-4, 2, 2, 2, 0, &passed, &report) == GMMTF_OK);
  EXPECT(passed == 1);
  EXPECT(report != NULL && strstr(report, "tensor_exactness") != NULL);
  gmmtf_string_free(report);

  const char* config =
      "dims = 2\n"
      "k_values = 2\n"
      "trials = 2\n"
      "solvers = em-kmeanspp\n";
  char* summary = NULL;
  EXPECT(gmmtf_bench_run(config, "capi_bench_out", "csv", &summary) == GMMTF_OK);
  EXPECT(summary != NULL && strstr(summary, "em-kmeanspp") != NULL);
  gmmtf_string_free(summary);
  FILE* f = fopen("capi_bench_out/report.csv", "r");
  EXPECT(f != NULL);
  if (f) fclose(f);
  EXPECT(gmmtf_bench_run("trials = nope\n", "capi_bench_out", "csv", NULL) ==
         GMMTF_ERR_INVALID_ARGUMENT);
}

int main(void) {
  test_sample_and_solve();
  test_json_round_trip();
  test_errors();
  test_harness();
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}

#include "gmmtf/gmmtf.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "gmmtf/bench.hpp"
#include "gmmtf/constructions.hpp"
#include "gmmtf/em.hpp"
#include "gmmtf/io.hpp"
#include "gmmtf/metrics.hpp"
#include "gmmtf/sampler.hpp"
#include "gmmtf/spectral.hpp"
#include "json.hpp"

struct gmmtf_task {
  gmmtf::Task task;
};

struct gmmtf_params {
  gmmtf::GmmParams params;
};

namespace {

thread_local std::string last_error;

gmmtf_status status_of(gmmtf::ErrorCode code) {
  using gmmtf::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return GMMTF_ERR_INVALID_ARGUMENT;
    case ErrorCode::sampling_exhausted: return GMMTF_ERR_SAMPLING_EXHAUSTED;
    case ErrorCode::degenerate_component: return GMMTF_ERR_DEGENERATE_COMPONENT;
    case ErrorCode::rank_error: return GMMTF_ERR_RANK;
    case ErrorCode::decomposition_failure: return GMMTF_ERR_DECOMPOSITION;
    case ErrorCode::capacity_error: return GMMTF_ERR_CAPACITY;
    case ErrorCode::overflow_error: return GMMTF_ERR_OVERFLOW;
    case ErrorCode::io_error: return GMMTF_ERR_IO;
  }
  return GMMTF_ERR_INTERNAL;
}

template <typename F>
gmmtf_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return GMMTF_OK;
  } catch (const gmmtf::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return GMMTF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return GMMTF_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) gmmtf::fail(gmmtf::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

gmmtf::Task sample_exact(int d, int k, int n, std::uint64_t seed, bool anisotropic) {
  using namespace gmmtf;
  if (n < 1) fail(ErrorCode::invalid_argument, "n must be >= 1");
  SamplerConfig sc;
  sc.d = d;
  sc.k_set = {k};
  sc.anisotropic = anisotropic;
  sc.seed = seed;
  sc.validate();
  if (d < 1 || k < 1) fail(ErrorCode::invalid_argument, "d and k must be >= 1");
  Rng rng(seed);
  Task t;
  t.k = k;
  t.truth.means = sample_means(d, k, sc, rng);
  t.truth.weights = sample_mixing(k, sc, rng);
  if (anisotropic) t.truth.scales = sample_scales(d, k, rng);
  Sample s = sample_gmm_data(t.truth, n, rng);
  t.data = std::move(s.data);
  t.labels = std::move(s.labels);
  return t;
}

}  // namespace

extern "C" {

const char* gmmtf_last_error(void) { return last_error.c_str(); }

const char* gmmtf_status_name(gmmtf_status status) {
  switch (status) {
    case GMMTF_OK: return "ok";
    case GMMTF_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case GMMTF_ERR_SAMPLING_EXHAUSTED: return "sampling-exhausted";
    case GMMTF_ERR_DEGENERATE_COMPONENT: return "degenerate-component";
    case GMMTF_ERR_RANK: return "rank-error";
    case GMMTF_ERR_DECOMPOSITION: return "decomposition-failure";
    case GMMTF_ERR_CAPACITY: return "capacity-error";
    case GMMTF_ERR_OVERFLOW: return "overflow-error";
    case GMMTF_ERR_IO: return "io-error";
    case GMMTF_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* gmmtf_version(void) { return "0.1.0"; }

void gmmtf_string_free(char* s) { std::free(s); }

gmmtf_status gmmtf_task_sample(int d, int k, int n, uint64_t seed, int anisotropic,
                               gmmtf_task** out) {
  return guard([&] {
    need(out, "out");
    *out = new gmmtf_task{sample_exact(d, k, n, seed, anisotropic != 0)};
  });
}

gmmtf_status gmmtf_sample_tasks_json(int d, const int* k_set, size_t k_count, int n_max,
                                     int anisotropic, uint64_t seed, int count,
                                     char** out_json) {
  return guard([&] {
    need(out_json, "out_json");
    if (k_count > 0) need(k_set, "k_set");
    if (count < 0) gmmtf::fail(gmmtf::ErrorCode::invalid_argument, "count < 0");
    gmmtf::SamplerConfig sc;
    sc.d = d;
    sc.k_set.assign(k_set, k_set + k_count);
    sc.n_max = n_max;
    sc.anisotropic = anisotropic != 0;
    sc.seed = seed;
    sc.validate();
    std::string text = "[";
    for (int i = 0; i < count; ++i) {
      if (i) text += ",\n";
      text += gmmtf::task_to_json(gmmtf::sample_task_indexed(sc, static_cast<std::uint64_t>(i)));
    }
    text += "]\n";
    *out_json = dup(text);
  });
}

gmmtf_status gmmtf_task_from_json(const char* json, gmmtf_task** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    gmmtf::Task t = gmmtf::task_from_json(json);
    gmmtf::require_valid(t.truth);
    *out = new gmmtf_task{std::move(t)};
  });
}

gmmtf_status gmmtf_task_to_json(const gmmtf_task* task, char** out_json) {
  return guard([&] {
    need(task, "task");
    need(out_json, "out_json");
    *out_json = dup(gmmtf::task_to_json(task->task));
  });
}

void gmmtf_task_free(gmmtf_task* task) { delete task; }

int gmmtf_task_dim(const gmmtf_task* task) { return task ? task->task.dim() : -1; }
int gmmtf_task_k(const gmmtf_task* task) { return task ? task->task.k : -1; }
int gmmtf_task_n(const gmmtf_task* task) { return task ? task->task.n() : -1; }

gmmtf_status gmmtf_task_truth(const gmmtf_task* task, gmmtf_params** out) {
  return guard([&] {
    need(task, "task");
    need(out, "out");
    *out = new gmmtf_params{task->task.truth};
  });
}

gmmtf_status gmmtf_solve(const gmmtf_task* task, const char* solver, const char* init,
                         uint64_t seed, gmmtf_params** out) {
  return guard([&] {
    using namespace gmmtf;
    need(task, "task");
    need(solver, "solver");
    need(out, "out");
    const Task& t = task->task;
    const std::string name = solver;
    const InitStrategy strategy = parse_init_strategy(init ? init : "kmeanspp");
    const GmmParams* truth = t.truth.k() == t.k ? &t.truth : nullptr;
    GmmParams result;
    if (name == "em") {
      EmOptions opts;
      opts.seed = seed;
      opts.anisotropic = t.truth.anisotropic();
      result = run_em(t.data, t.k, strategy, opts, truth).params;
    } else if (name == "spectral") {
      Rng rng(seed);
      result = spectral_estimate(t.data, t.k, rng);
    } else if (name == "tf-em") {
      Rng rng(seed);
      const GmmParams start = initialize(t.data, t.k, strategy, rng, truth, false);
      EmTfConfig cfg;
      cfg.d0 = t.dim();
      cfg.k0 = t.k;
      result = run_tf_em(t.data, t.k, start, cfg).params;
    } else {
      fail(ErrorCode::invalid_argument, "unknown solver '" + name + "' (em, spectral, tf-em)");
    }
    *out = new gmmtf_params{std::move(result)};
  });
}

int gmmtf_params_k(const gmmtf_params* params) { return params ? params->params.k() : -1; }
int gmmtf_params_dim(const gmmtf_params* params) { return params ? params->params.dim() : -1; }

gmmtf_status gmmtf_params_weights(const gmmtf_params* params, double* out, size_t len) {
  return guard([&] {
    need(params, "params");
    need(out, "out");
    const auto& w = params->params.weights;
    if (len < static_cast<size_t>(w.size())) gmmtf::fail(gmmtf::ErrorCode::invalid_argument, "buffer too small");
    for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = w(i);
  });
}

gmmtf_status gmmtf_params_means(const gmmtf_params* params, double* out, size_t len) {
  return guard([&] {
    need(params, "params");
    need(out, "out");
    const auto& m = params->params.means;
    if (len < static_cast<size_t>(m.size())) gmmtf::fail(gmmtf::ErrorCode::invalid_argument, "buffer too small");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  });
}

gmmtf_status gmmtf_params_to_json(const gmmtf_params* params, char** out_json) {
  return guard([&] {
    need(params, "params");
    need(out_json, "out_json");
    *out_json = dup(gmmtf::params_to_json(params->params));
  });
}

void gmmtf_params_free(gmmtf_params* params) { delete params; }

gmmtf_status gmmtf_evaluate(const gmmtf_task* task, const gmmtf_params* est, double* l2_error,
                            double* accuracy, double* log_likelihood) {
  return guard([&] {
    need(task, "task");
    need(est, "est");
    const gmmtf::Task& t = task->task;
    if (l2_error) *l2_error = gmmtf::l2_error(est->params, t.truth);
    if (accuracy) {
      *accuracy = t.labels.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : gmmtf::clustering_accuracy(est->params, t.data, t.labels);
    }
    if (log_likelihood) *log_likelihood = gmmtf::log_likelihood(t.data, est->params);
  });
}

gmmtf_status gmmtf_bench_run(const char* config_text, const char* out_dir, const char* format,
                             char** summary_json) {
  return guard([&] {
    need(out_dir, "out_dir");
    const gmmtf::SuiteConfig config =
        config_text ? gmmtf::SuiteConfig::from_map(gmmtf::parse_flat_config(config_text))
                    : gmmtf::SuiteConfig{};
    const gmmtf::Report report = gmmtf::run_suite(config);
    gmmtf::write_report(report, out_dir, format ? format : "csv");
    if (summary_json) *summary_json = dup(gmmtf::summary_json(report));
  });
}

gmmtf_status gmmtf_verify_constructions(double delta, int layers, int d0, int k0, uint64_t seed,
                                        int* passed, char** report_json) {
  return guard([&] {
    gmmtf::VerifyConfig cfg;
    cfg.delta = delta;
    cfg.layers = layers;
    cfg.d0 = d0;
    cfg.k0 = k0;
    cfg.seed = seed;
    const gmmtf::VerifyReport report = gmmtf::verify_constructions(cfg);
    if (passed) *passed = report.passed() ? 1 : 0;
    if (report_json) *report_json = dup(gmmtf::verify_report_json(report));
  });
}

}  // extern "C"

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmmtf/constructions.hpp"
#include "gmmtf/core.hpp"

namespace gmmtf {

// Suites: "compare" (solver grid over dims x k_values), "shift" (means moved
// by sigma_p * N(0, I) before sampling) and "samples" (N over n_values).
struct SuiteConfig {
  std::vector<std::string> suites{"compare"};
  std::vector<int> dims{2, 8, 32};
  std::vector<int> k_values{2, 3, 4, 5};
  int n_eval = 128;
  int trials = 128;
  std::vector<std::string> solvers{"em-random", "em-kmeanspp", "spectral"};
  std::vector<double> sigma_p{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> n_values{32, 64, 128, 256, 512};
  bool anisotropic = false;
  std::uint64_t seed = 0;
  int threads = 1;

  int em_max_iters = 100;
  double em_tol = 1e-6;
  int em_restarts = 1;
  int spectral_restarts = 20;
  int spectral_iters = 50;
  int spectral_max_dim = 32;  // larger d is reported as "skipped"
  double tf_delta = 1e-4;
  int tf_layers = 10;
  int tf_max_dim = 8;

  // Throws invalid_argument.
  void validate() const;
  // Keys are the field names above; lists are comma separated.
  static SuiteConfig from_map(const std::map<std::string, std::string>& kv);
};

struct ReportRow {
  std::string suite;
  int d = 0;
  int k = 0;
  int n = 0;
  std::string solver;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  std::string status;  // "ok", "skipped" or an error code name
};

struct Report {
  std::vector<ReportRow> rows;
};

inline const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> names{"em-random", "em-kmeanspp", "em-oracle",
                                              "spectral", "tf-em"};
  return names;
}

// Rows ordered by (suite, cell, trial, solver, metric).
Report run_suite(const SuiteConfig& config);

// Seed of trial `trial` in cell `cell` of a run seeded with `seed`.
std::uint64_t task_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t trial);

std::string report_csv(const Report& report);
std::string report_json(const Report& report);

struct CellSummary {
  std::string suite;
  int d = 0;
  int k = 0;
  std::string solver;
  std::string metric;
  int count = 0;  // successful runs
  std::map<std::string, int> failures;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Aggregates recomputed from the raw rows.
std::vector<CellSummary> summarize(const Report& report);
std::string summary_json(const Report& report);

// Median of `metric` over the ok rows of one cell; NaN if there are none.
double cell_median(const Report& report, const std::string& suite, int d, int k,
                   const std::string& solver, const std::string& metric);
// Fraction of runs in a cell with the given status.
double cell_status_fraction(const Report& report, const std::string& suite, int d,
                            int k, const std::string& solver, const std::string& status);

// Writes report.csv or report.json plus summary.json into `dir`.
void write_report(const Report& report, const std::string& dir, const std::string& format);

// ------------------------------------------------------------------ verify --

struct VerifyConfig {
  double delta = 1e-4;
  int layers = 10;
  int d0 = 4;
  int k0 = 4;
  int n = 1024;
  int tensor_trials = 100;
  int tensor_layers = 5;
  std::uint64_t seed = 0;
};

struct VerifyCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
};

// Tensor exactness, EM tracking, delta sweep, dimension adaptation and the
// L = 0 identity.
VerifyReport verify_constructions(const VerifyConfig& config);
std::string verify_report_json(const VerifyReport& report);

// Helpers shared with the tests.

// Max relative deviation of the transformer tensor iterates from repeated
// T(I, v, v) over `trials` random symmetric tensors with d in `dims`.
double tensor_exactness(int d0, int layers, const std::vector<int>& dims, int trials,
                        std::uint64_t seed);

// Task for EM tracking: means inside [-box, box]^d whose closest pair lies at
// distance in [min_sep, max_sep], weights from the default sampler range.
// Moderate separation keeps responsibilities away from 0/1 so that the
// approximation error of the compiled network is actually exercised.
Task tracking_task(int d, int k, int n, double min_sep, double max_sep, double box,
                   std::uint64_t seed);

inline constexpr double kTrackSepLo = 3.0;
inline constexpr double kTrackSepHi = 4.5;
inline constexpr double kTrackBox = 6.0;

// Per-iteration max{|mu diff|, |pi diff|} between the EM transformer and
// reference EM on the same truncated data and init; entry l covers
// iteration l (entry 0 is the init).
std::vector<double> em_tracking_deviation(const Task& task, const GmmParams& init,
                                          const EmTfConfig& cfg,
                                          const TfWeights* weights = nullptr);

}  // namespace gmmtf

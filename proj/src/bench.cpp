#include "gmmtf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <thread>

#include "gmmtf/em.hpp"
#include "gmmtf/io.hpp"
#include "gmmtf/metrics.hpp"
#include "gmmtf/sampler.hpp"
#include "gmmtf/spectral.hpp"
#include "json.hpp"

namespace gmmtf {

using nlohmann::json;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  T value{};
  try {
    if constexpr (std::is_same_v<T, double>) {
      value = std::stod(text, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      value = std::stoull(text, &used);
    } else {
      value = static_cast<T>(std::stol(text, &used));
    }
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    fail(ErrorCode::invalid_argument, "config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  fail(ErrorCode::invalid_argument, "config key '" + key + "': expected a boolean");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_sigma(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

struct Cell {
  std::string suite;
  int d = 0;
  int k = 0;
  int n = 0;
  double sigma_p = 0.0;
};

std::vector<Cell> make_cells(const SuiteConfig& c) {
  std::vector<Cell> cells;
  for (const auto& suite : c.suites) {
    if (suite == "compare") {
      for (int d : c.dims)
        for (int k : c.k_values) cells.push_back({suite, d, k, c.n_eval, 0.0});
    } else if (suite == "shift") {
      for (double s : c.sigma_p)
        for (int d : c.dims)
          for (int k : c.k_values)
            cells.push_back({"shift:sigma_p=" + format_sigma(s), d, k, c.n_eval, s});
    } else {
      for (int n : c.n_values)
        for (int d : c.dims)
          for (int k : c.k_values) cells.push_back({suite, d, k, n, 0.0});
    }
  }
  return cells;
}

Task make_task(const Cell& cell, bool anisotropic, std::uint64_t seed) {
  Rng rng(seed);
  SamplerConfig sc;
  sc.d = cell.d;
  sc.k_set = {cell.k};
  sc.anisotropic = anisotropic;
  Task task;
  task.k = cell.k;
  task.truth.means = sample_means(cell.d, cell.k, sc, rng);
  task.truth.weights = sample_mixing(cell.k, sc, rng);
  if (anisotropic) task.truth.scales = sample_scales(cell.d, cell.k, rng);
  if (cell.sigma_p > 0.0) task.truth = perturb_means(task.truth, cell.sigma_p, rng);
  Sample s = sample_gmm_data(task.truth, cell.n, rng);
  task.data = std::move(s.data);
  task.labels = std::move(s.labels);
  return task;
}

struct SolverOutcome {
  std::string status = "ok";
  GmmParams params;
};

using WeightCache = std::map<std::pair<int, int>, TfWeights>;

SolverOutcome run_solver(const std::string& solver, const Task& task, std::uint64_t seed,
                         const SuiteConfig& c, const WeightCache& cache) {
  SolverOutcome out;
  const int d = task.dim();
  try {
    if (solver.rfind("em-", 0) == 0) {
      EmOptions opts;
      opts.max_iters = c.em_max_iters;
      opts.tol = c.em_tol;
      opts.anisotropic = c.anisotropic;
      opts.max_restarts = c.em_restarts;
      opts.seed = seed;
      const InitStrategy s = parse_init_strategy(solver.substr(3));
      out.params = run_em(task.data, task.k, s, opts, &task.truth).params;
    } else if (solver == "spectral") {
      if (c.anisotropic || d > c.spectral_max_dim) {
        out.status = "skipped";
        return out;
      }
      SpectralOptions opts;
      opts.power.restarts = c.spectral_restarts;
      opts.power.iters = c.spectral_iters;
      Rng rng(seed ^ 0x5bd1e995ULL);
      out.params = spectral_estimate(task.data, task.k, rng, opts);
    } else if (solver == "tf-em") {
      if (c.anisotropic || d > c.tf_max_dim) {
        out.status = "skipped";
        return out;
      }
      Rng rng(seed);
      const GmmParams init = kmeanspp_init(task.data, task.k, rng);
      EmTfConfig cfg;
      cfg.d0 = d;
      cfg.k0 = task.k;
      cfg.delta = c.tf_delta;
      cfg.layers = c.tf_layers;
      out.params = run_tf_em(task.data, task.k, init, cfg, cache.at({d, task.k})).params;
    } else {
      fail(ErrorCode::invalid_argument, "unknown solver " + solver);
    }
  } catch (const Error& e) {
    out.status = to_string(e.code());
  }
  return out;
}

const char* const kMetrics[] = {"l2_error", "accuracy", "log_likelihood"};

std::vector<ReportRow> run_job(const Cell& cell, std::uint64_t seed, const SuiteConfig& c,
                               const WeightCache& cache) {
  std::vector<ReportRow> rows;
  Task task;
  std::string task_status = "ok";
  try {
    task = make_task(cell, c.anisotropic, seed);
  } catch (const Error& e) {
    task_status = to_string(e.code());
  }
  for (const auto& solver : c.solvers) {
    SolverOutcome o;
    if (task_status != "ok") {
      o.status = task_status;
    } else {
      o = run_solver(solver, task, seed, c, cache);
    }
    double values[3] = {kNaN, kNaN, kNaN};
    if (o.status == "ok") {
      values[0] = l2_error(o.params, task.truth);
      values[1] = clustering_accuracy(o.params, task.data, task.labels);
      values[2] = log_likelihood(task.data, o.params);
    }
    for (int m = 0; m < 3; ++m) {
      rows.push_back({cell.suite, cell.d, cell.k, task_status == "ok" ? task.n() : cell.n,
                      solver, seed, kMetrics[m], values[m], o.status});
    }
  }
  return rows;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void SuiteConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::invalid_argument, "suite config: " + m); };
  if (trials < 1) bad("trials must be >= 1");
  if (n_eval < 1) bad("n_eval must be >= 1");
  if (threads < 1) bad("threads must be >= 1");
  if (dims.empty() || k_values.empty()) bad("dims and k_values must be nonempty");
  for (int d : dims)
    if (d < 1) bad("dims must be >= 1");
  for (int k : k_values)
    if (k < 1) bad("k_values must be >= 1");
  for (int n : n_values)
    if (n < 1) bad("n_values must be >= 1");
  for (double s : sigma_p)
    if (!(s >= 0.0)) bad("sigma_p must be >= 0");
  if (solvers.empty()) bad("no solvers");
  for (const auto& s : solvers) {
    if (std::find(known_solvers().begin(), known_solvers().end(), s) == known_solvers().end()) {
      bad("unknown solver '" + s + "'");
    }
  }
  for (const auto& s : suites) {
    if (s != "compare" && s != "shift" && s != "samples") bad("unknown suite '" + s + "'");
  }
  if (em_max_iters < 1 || !(em_tol > 0.0) || em_restarts < 0) bad("bad EM options");
  if (spectral_restarts < 1 || spectral_iters < 1) bad("bad spectral options");
  if (!(tf_delta > 0.0 && tf_delta < 1.0) || tf_layers < 0) bad("bad tf-em options");
}

SuiteConfig SuiteConfig::from_map(const std::map<std::string, std::string>& kv) {
  SuiteConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "suites") c.suites = split_list(value);
    else if (key == "dims") c.dims = parse_list<int>(key, value);
    else if (key == "k_values") c.k_values = parse_list<int>(key, value);
    else if (key == "n_eval") c.n_eval = parse_number<int>(key, value);
    else if (key == "trials") c.trials = parse_number<int>(key, value);
    else if (key == "solvers") c.solvers = split_list(value);
    else if (key == "sigma_p") c.sigma_p = parse_list<double>(key, value);
    else if (key == "n_values") c.n_values = parse_list<int>(key, value);
    else if (key == "anisotropic") c.anisotropic = parse_bool(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "threads") c.threads = parse_number<int>(key, value);
    else if (key == "em_max_iters") c.em_max_iters = parse_number<int>(key, value);
    else if (key == "em_tol") c.em_tol = parse_number<double>(key, value);
    else if (key == "em_restarts") c.em_restarts = parse_number<int>(key, value);
    else if (key == "spectral_restarts") c.spectral_restarts = parse_number<int>(key, value);
    else if (key == "spectral_iters") c.spectral_iters = parse_number<int>(key, value);
    else if (key == "spectral_max_dim") c.spectral_max_dim = parse_number<int>(key, value);
    else if (key == "tf_delta") c.tf_delta = parse_number<double>(key, value);
    else if (key == "tf_layers") c.tf_layers = parse_number<int>(key, value);
    else if (key == "tf_max_dim") c.tf_max_dim = parse_number<int>(key, value);
    else fail(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

std::uint64_t task_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t trial) {
  return splitmix64(seed ^ splitmix64((cell << 32) ^ trial));
}

Report run_suite(const SuiteConfig& config) {
  config.validate();
  const std::vector<Cell> cells = make_cells(config);

  WeightCache cache;
  if (std::find(config.solvers.begin(), config.solvers.end(), "tf-em") != config.solvers.end() &&
      !config.anisotropic) {
    for (const Cell& cell : cells) {
      if (cell.d > config.tf_max_dim || cache.count({cell.d, cell.k})) continue;
      EmTfConfig cfg;
      cfg.d0 = cell.d;
      cfg.k0 = cell.k;
      cfg.delta = config.tf_delta;
      cfg.layers = config.tf_layers;
      cache.emplace(std::make_pair(cell.d, cell.k), build_em_tf_weights(cfg));
    }
  }

  const std::size_t jobs = cells.size() * static_cast<std::size_t>(config.trials);
  std::vector<std::vector<ReportRow>> results(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t cell = j / config.trials;
      const std::size_t trial = j % config.trials;
      results[j] = run_job(cells[cell], task_seed(config.seed, cell, trial), config, cache);
    }
  };
  const int threads = std::min<std::size_t>(config.threads, std::max<std::size_t>(jobs, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Report report;
  for (auto& rows : results)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  return report;
}

std::string report_csv(const Report& report) {
  std::string out = "suite,d,K,N,solver,seed,metric,value,status\n";
  for (const auto& r : report.rows) {
    out += r.suite + ',' + std::to_string(r.d) + ',' + std::to_string(r.k) + ',' +
           std::to_string(r.n) + ',' + r.solver + ',' + std::to_string(r.seed) + ',' +
           r.metric + ',' + format_double(r.value) + ',' + r.status + '\n';
  }
  return out;
}

std::string report_json(const Report& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"suite", r.suite}, {"d", r.d}, {"K", r.k}, {"N", r.n},
                    {"solver", r.solver}, {"seed", r.seed}, {"metric", r.metric},
                    {"value", number_or_null(r.value)}, {"status", r.status}});
  }
  return json{{"rows", rows}}.dump(1);
}

std::vector<CellSummary> summarize(const Report& report) {
  std::vector<CellSummary> out;
  std::vector<std::vector<double>> values;
  std::map<std::tuple<std::string, int, int, std::string, std::string>, std::size_t> index;
  for (const auto& r : report.rows) {
    const auto key = std::make_tuple(r.suite, r.d, r.k, r.solver, r.metric);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      CellSummary s;
      s.suite = r.suite;
      s.d = r.d;
      s.k = r.k;
      s.solver = r.solver;
      s.metric = r.metric;
      out.push_back(s);
      values.emplace_back();
    }
    if (r.status == "ok") {
      values[it->second].push_back(r.value);
    } else {
      ++out[it->second].failures[r.status];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    out[i].count = static_cast<int>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    out[i].mean = v.empty() ? kNaN : sum / static_cast<double>(v.size());
    out[i].median = quantile(v, 0.5);
    out[i].q1 = quantile(v, 0.25);
    out[i].q3 = quantile(v, 0.75);
  }
  return out;
}

std::string summary_json(const Report& report) {
  json cells = json::array();
  for (const auto& s : summarize(report)) {
    cells.push_back({{"suite", s.suite}, {"d", s.d}, {"K", s.k}, {"solver", s.solver},
                     {"metric", s.metric}, {"count", s.count}, {"failures", s.failures},
                     {"mean", number_or_null(s.mean)}, {"median", number_or_null(s.median)},
                     {"q1", number_or_null(s.q1)}, {"q3", number_or_null(s.q3)}});
  }
  return json{{"cells", cells}}.dump(1);
}

double cell_median(const Report& report, const std::string& suite, int d, int k,
                   const std::string& solver, const std::string& metric) {
  std::vector<double> v;
  for (const auto& r : report.rows) {
    if (r.suite == suite && r.d == d && r.k == k && r.solver == solver &&
        r.metric == metric && r.status == "ok") {
      v.push_back(r.value);
    }
  }
  return quantile(std::move(v), 0.5);
}

double cell_status_fraction(const Report& report, const std::string& suite, int d, int k,
                            const std::string& solver, const std::string& status) {
  int total = 0;
  int hits = 0;
  for (const auto& r : report.rows) {
    if (r.suite == suite && r.d == d && r.k == k && r.solver == solver &&
        r.metric == "l2_error") {
      ++total;
      hits += r.status == status;
    }
  }
  return total == 0 ? kNaN : static_cast<double>(hits) / total;
}

void write_report(const Report& report, const std::string& dir, const std::string& format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  if (format == "csv") {
    write_file((base / "report.csv").string(), report_csv(report));
  } else if (format == "json") {
    write_file((base / "report.json").string(), report_json(report));
  } else {
    fail(ErrorCode::invalid_argument, "format must be csv or json");
  }
  write_file((base / "summary.json").string(), summary_json(report));
}

// ------------------------------------------------------------------ verify --

namespace {

SymTensor3 random_symmetric_tensor(int d, Rng& rng) {
  SymTensor3 t(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int m = j; m < d; ++m) {
        const double x = rng.normal();
        const int idx[3] = {i, j, m};
        int p[3] = {0, 1, 2};
        do {
          t(idx[p[0]], idx[p[1]], idx[p[2]]) = x;
        } while (std::next_permutation(p, p + 3));
      }
  return t;
}

Vector brute_contract(const SymTensor3& t, const Vector& v) {
  const int d = t.dim();
  Vector out = Vector::Zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int m = 0; m < d; ++m) out(i) += t(i, j, m) * v(j) * v(m);
  return out;
}

double param_deviation(const GmmParams& a, const GmmParams& b) {
  double dev = 0.0;
  for (int c = 0; c < a.k(); ++c) {
    dev = std::max(dev, (a.means.row(c) - b.means.row(c)).norm());
    dev = std::max(dev, std::abs(a.weights(c) - b.weights(c)));
  }
  return dev;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

double tensor_exactness(int d0, int layers, const std::vector<int>& dims, int trials,
                        std::uint64_t seed) {
  const TfWeights weights = build_tensor_power_tf(d0, layers);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(trial));
    const int d = dims[static_cast<std::size_t>(trial) % dims.size()];
    const SymTensor3 t = random_symmetric_tensor(d, rng);
    Vector v = rng.unit_vector(d);
    const std::vector<Vector> got = run_tf_tensor_power(t, v, weights, d0);
    for (const Vector& g : got) {
      v = brute_contract(t, v);
      const double scale = v.cwiseAbs().maxCoeff();
      const double err = (g - v).cwiseAbs().maxCoeff();
      worst = std::max(worst, scale > 0.0 ? err / scale : err);
    }
  }
  return worst;
}

Task tracking_task(int d, int k, int n, double min_sep, double max_sep, double box,
                   std::uint64_t seed) {
  Rng rng(seed);
  Task task;
  task.k = k;
  task.truth.means.resize(k, d);
  bool ok = false;
  for (int attempt = 0; attempt < kMaxMeanAttempts && !ok; ++attempt) {
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < d; ++j) task.truth.means(c, j) = rng.uniform(-box, box);
    double closest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        closest = std::min(closest, (task.truth.means.row(a) - task.truth.means.row(b)).norm());
    ok = k == 1 || (closest >= min_sep && closest <= max_sep);
  }
  if (!ok) fail(ErrorCode::sampling_exhausted, "no means with the requested separation");
  task.truth.weights = sample_mixing(k, SamplerConfig{}, rng);
  Sample s = sample_gmm_data(task.truth, n, rng);
  task.data = std::move(s.data);
  task.labels = std::move(s.labels);
  return task;
}

std::vector<double> em_tracking_deviation(const Task& task, const GmmParams& init,
                                          const EmTfConfig& cfg, const TfWeights* weights) {
  const Matrix x = truncate_to_multiple(task.data, task.k);
  TfEmResult tf;
  if (weights) {
    tf = run_tf_em(x, task.k, init, cfg, *weights);
  } else {
    tf = run_tf_em(x, task.k, init, cfg);
  }
  std::vector<double> dev;
  GmmParams ref = init;
  for (std::size_t l = 0; l < tf.snapshots.size(); ++l) {
    if (l > 0) ref = m_step(x, e_step(x, ref));
    double e = param_deviation(tf.snapshots[l], ref);
    if (l + 1 == tf.snapshots.size()) e = std::max(e, param_deviation(tf.params, ref));
    dev.push_back(e);
  }
  return dev;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

VerifyReport verify_constructions(const VerifyConfig& config) {
  if (config.d0 < 1 || config.k0 < 1 || config.layers < 0 || !(config.delta > 0.0) ||
      config.n < 1) {
    fail(ErrorCode::invalid_argument, "verify: invalid configuration");
  }
  VerifyReport report;
  auto add = [&](std::string name, double measured, double threshold, bool passed,
                 std::string detail) {
    report.checks.push_back({std::move(name), measured, threshold, passed, std::move(detail)});
  };

  // Tensor power: one weight set at d0 for every d <= d0.
  {
    const int layers = std::min(config.layers, config.tensor_layers);
    std::vector<int> dims;
    for (int d = 1; d <= config.d0; ++d) dims.push_back(d);
    const double dev = tensor_exactness(config.d0, layers, dims, config.tensor_trials,
                                        config.seed);
    add("tensor_exactness", dev, 1e-9, dev <= 1e-9,
        std::to_string(config.tensor_trials) + " tensors, d in 1.." + std::to_string(config.d0) +
            ", L=" + std::to_string(layers) + ", one weight set");
  }

  EmTfConfig cfg;
  cfg.d0 = config.d0;
  cfg.k0 = config.k0;
  cfg.delta = config.delta;
  cfg.layers = config.layers;

  auto tracking = [&](int d, int k, const EmTfConfig& c, const TfWeights* w,
                      std::uint64_t salt) {
    const std::uint64_t s = splitmix64(config.seed ^ salt);
    const Task task = tracking_task(d, k, config.n, kTrackSepLo, kTrackSepHi, kTrackBox, s);
    Rng rng(s + 1);
    const GmmParams init = oracle_init(task.truth, rng);
    const auto dev = em_tracking_deviation(task, init, c, w);
    return *std::max_element(dev.begin(), dev.end());
  };

  const int d_track = std::min(2, config.d0);
  const int k_track = std::min(2, config.k0);
  {
    const double dev = tracking(d_track, k_track, cfg, nullptr, 1);
    add("em_tracking", dev, 1e-2, dev <= 1e-2,
        "d=" + std::to_string(d_track) + ", K=" + std::to_string(k_track) +
            ", N=" + std::to_string(config.n) + ", L=" + std::to_string(config.layers) +
            ", delta=" + fmt(config.delta));
  }

  {
    std::vector<double> devs;
    std::string detail;
    for (double delta : {1e-2, 1e-3, 1e-4}) {
      EmTfConfig c = cfg;
      c.delta = delta;
      devs.push_back(tracking(d_track, k_track, c, nullptr, 1));
      detail += (detail.empty() ? "" : ", ") + ("delta=" + fmt(delta) + ": " + fmt(devs.back()));
    }
    const bool mono = config.layers == 0 || (devs[1] < devs[0] && devs[2] < devs[1]);
    add("delta_sweep", devs.back(), devs.front(), mono, detail);
  }

  {
    const TfWeights shared = build_em_tf_weights(cfg);
    double worst = 0.0;
    std::string detail;
    const std::pair<int, int> shapes[] = {{1, 2}, {2, 2}, {2, 3}, {4, 4}};
    int salt = 10;
    for (auto [d, k] : shapes) {
      ++salt;
      if (d > config.d0 || k > config.k0) continue;
      const double dev = tracking(d, k, cfg, &shared, static_cast<std::uint64_t>(salt));
      worst = std::max(worst, dev);
      detail += (detail.empty() ? "" : ", ") +
                ("(" + std::to_string(d) + "," + std::to_string(k) + "): " + fmt(dev));
    }
    add("dimension_adaptation", worst, 1e-2, worst <= 1e-2, detail + " with one weight set");
  }

  {
    EmTfConfig c = cfg;
    c.layers = 0;
    const Task task = tracking_task(d_track, k_track, config.n, kTrackSepLo, kTrackSepHi, kTrackBox, config.seed);
    Rng rng(config.seed + 7);
    const GmmParams init = oracle_init(task.truth, rng);
    const TfEmResult r = run_tf_em(task.data, task.k, init, c);
    const double dev = param_deviation(r.params, init);
    add("identity_L0", dev, 1e-12, dev <= 1e-12, "L=0 returns the initialization");
  }
  return report;
}

std::string verify_report_json(const VerifyReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"measured", number_or_null(c.measured)},
                      {"threshold", c.threshold}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return json{{"passed", report.passed()}, {"checks", checks}}.dump(1);
}

}  // namespace gmmtf

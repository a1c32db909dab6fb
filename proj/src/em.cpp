#include "gmmtf/em.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace gmmtf {

const char* to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::kmeanspp: return "kmeanspp";
    case InitStrategy::random: return "random";
    case InitStrategy::oracle: return "oracle";
  }
  return "unknown";
}

InitStrategy parse_init_strategy(const std::string& name) {
  if (name == "kmeanspp") return InitStrategy::kmeanspp;
  if (name == "random") return InitStrategy::random;
  if (name == "oracle") return InitStrategy::oracle;
  fail(ErrorCode::invalid_argument, "unknown init strategy: " + name);
}

namespace {

void check_dims(const Matrix& data, const GmmParams& params) {
  if (data.cols() != params.dim()) {
    fail(ErrorCode::invalid_argument, "data dimension does not match params");
  }
}

// N x K matrix of log(pi_k) + log phi(x_i; mu_k) up to a per-row constant.
Matrix unnormalized_log_posteriors(const Matrix& data, const GmmParams& params) {
  const int k = params.k();
  Matrix logits(data.rows(), k);
  if (!params.scales) {
    // -|x - mu|^2 / 2 = x.mu - |mu|^2 / 2 - |x|^2 / 2; the last term cancels.
    logits.noalias() = data * params.means.transpose();
    for (int c = 0; c < k; ++c) {
      logits.col(c).array() +=
          std::log(params.weights(c)) - 0.5 * params.means.row(c).squaredNorm();
    }
    return logits;
  }
  for (int c = 0; c < k; ++c) {
    const auto mu = params.means.row(c).array();
    const auto s = params.scales->row(c).array();
    const double offset = std::log(params.weights(c)) - s.log().sum();
    for (int i = 0; i < data.rows(); ++i) {
      logits(i, c) = offset - 0.5 * ((data.row(i).array() - mu) / s).square().sum();
    }
  }
  return logits;
}

}  // namespace

Responsibilities e_step(const Matrix& data, const GmmParams& params) {
  check_dims(data, params);
  Matrix resp = unnormalized_log_posteriors(data, params);
  for (int i = 0; i < resp.rows(); ++i) {
    const double mx = resp.row(i).maxCoeff();
    resp.row(i) = (resp.row(i).array() - mx).exp();
    resp.row(i) /= resp.row(i).sum();
  }
  return resp;
}

GmmParams m_step(const Matrix& data, const Responsibilities& resp,
                 bool anisotropic) {
  if (resp.rows() != data.rows()) {
    fail(ErrorCode::invalid_argument, "responsibility rows != data rows");
  }
  const int k = static_cast<int>(resp.cols());
  const double n = static_cast<double>(data.rows());
  const Vector mass = resp.colwise().sum().transpose();
  for (int c = 0; c < k; ++c) {
    if (!(mass(c) >= kMinComponentMass)) {
      throw Error(ErrorCode::degenerate_component,
                  "component " + std::to_string(c) + " has no mass", c);
    }
  }
  GmmParams out;
  out.weights = mass / n;
  out.means = resp.transpose() * data;
  for (int c = 0; c < k; ++c) out.means.row(c) /= mass(c);
  if (anisotropic) {
    Matrix var(k, data.cols());
    for (int c = 0; c < k; ++c) {
      const Matrix centered = data.rowwise() - out.means.row(c);
      var.row(c) = (resp.col(c).transpose() * centered.array().square().matrix()) / mass(c);
    }
    out.scales = var.array().max(kScaleFloor * kScaleFloor).sqrt().matrix();
  }
  return out;
}

double parameter_change(const GmmParams& from, const GmmParams& to) {
  double worst = 0.0;
  for (int c = 0; c < from.k(); ++c) {
    worst = std::max(worst, (to.means.row(c) - from.means.row(c)).norm());
    worst = std::max(worst, std::abs(to.weights(c) - from.weights(c)) / from.weights(c));
    if (from.scales && to.scales) {
      worst = std::max(worst, (to.scales->row(c) - from.scales->row(c)).norm());
    }
  }
  return worst;
}

namespace {

double average_log_likelihood(const Matrix& data, const GmmParams& params) {
  double total = 0.0;
  for (int i = 0; i < data.rows(); ++i) {
    total += gmm_log_density(data.row(i).transpose(), params);
  }
  return total / static_cast<double>(data.rows());
}

EmResult iterate_from(const Matrix& data, GmmParams current,
                      const EmOptions& options) {
  EmResult result;
  result.trace.iterates.push_back(current);
  result.trace.log_likelihood.push_back(average_log_likelihood(data, current));
  for (int it = 0; it < options.max_iters; ++it) {
    GmmParams next = m_step(data, e_step(data, current), options.anisotropic);
    const double change = parameter_change(current, next);
    current = std::move(next);
    result.trace.iterates.push_back(current);
    result.trace.log_likelihood.push_back(average_log_likelihood(data, current));
    if (change < options.tol) {
      result.trace.termination = Termination::converged;
      break;
    }
  }
  result.params = std::move(current);
  return result;
}

void check_options(int k, const EmOptions& options) {
  if (k < 1) fail(ErrorCode::invalid_argument, "run_em: k < 1");
  if (options.max_iters < 1) fail(ErrorCode::invalid_argument, "run_em: max_iters < 1");
  if (!(options.tol > 0.0)) fail(ErrorCode::invalid_argument, "run_em: tol <= 0");
}

double data_scale(const Matrix& data) {
  const Vector mean = data.colwise().mean().transpose();
  const double var =
      (data.rowwise() - mean.transpose()).squaredNorm() /
      std::max<double>(1.0, static_cast<double>(data.size()));
  return std::sqrt(std::max(var, 1e-12));
}

}  // namespace

EmResult run_em(const Matrix& data, int k, const GmmParams& init,
                const EmOptions& options) {
  check_options(k, options);
  if (init.k() != k) fail(ErrorCode::invalid_argument, "init K != k");
  check_dims(data, init);
  require_valid(init);
  GmmParams start = init;
  if (options.anisotropic && !start.scales) {
    start.scales = Matrix::Ones(k, init.dim());
  }
  Rng rng = Rng::stream(options.seed, 0x5e57a27);
  for (int attempt = 0;; ++attempt) {
    try {
      EmResult r = iterate_from(data, start, options);
      r.trace.restarts = attempt;
      return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_component || attempt >= options.max_restarts) {
        throw;
      }
      const double jitter = 0.1 * data_scale(data);
      start = init;
      if (options.anisotropic && !start.scales) start.scales = Matrix::Ones(k, init.dim());
      for (int c = 0; c < k; ++c) {
        start.means.row(c) += jitter * rng.normal_vector(init.dim()).transpose();
      }
    }
  }
}

EmResult run_em(const Matrix& data, int k, InitStrategy strategy,
                const EmOptions& options, const GmmParams* truth) {
  check_options(k, options);
  Rng rng = Rng::stream(options.seed, 0x1417);
  for (int attempt = 0;; ++attempt) {
    GmmParams init = initialize(data, k, strategy, rng, truth, options.anisotropic);
    try {
      EmOptions single = options;
      single.max_restarts = 0;
      EmResult r = run_em(data, k, init, single);
      r.trace.restarts = attempt;
      return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_component || attempt >= options.max_restarts) {
        throw;
      }
    }
  }
}

double min_separation(const Matrix& means) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < means.rows(); ++a)
    for (int b = a + 1; b < means.rows(); ++b)
      best = std::min(best, (means.row(a) - means.row(b)).norm());
  return best;
}

namespace {

GmmParams hard_assignment_step(const Matrix& data, const Matrix& centers,
                               bool anisotropic) {
  const int k = static_cast<int>(centers.rows());
  const int n = static_cast<int>(data.rows());
  std::vector<int> assign(n);
  Vector counts = Vector::Zero(k);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double dist = (data.row(i) - centers.row(c)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    assign[i] = best;
    counts(best) += 1.0;
  }
  GmmParams out;
  out.means = Matrix::Zero(k, data.cols());
  for (int i = 0; i < n; ++i) out.means.row(assign[i]) += data.row(i);
  for (int c = 0; c < k; ++c) {
    if (counts(c) > 0.0) {
      out.means.row(c) /= counts(c);
    } else {
      out.means.row(c) = centers.row(c);
      counts(c) = 1.0;  // keep an empty cluster alive with a token weight
    }
  }
  out.weights = counts / counts.sum();
  if (anisotropic) out.scales = Matrix::Ones(k, data.cols());
  return out;
}

GmmParams uniform_weights(const Matrix& means, bool anisotropic) {
  GmmParams out;
  const int k = static_cast<int>(means.rows());
  out.means = means;
  out.weights = Vector::Constant(k, 1.0 / k);
  if (anisotropic) out.scales = Matrix::Ones(k, means.cols());
  return out;
}

}  // namespace

GmmParams kmeanspp_init(const Matrix& data, int k, Rng& rng, bool anisotropic) {
  const int n = static_cast<int>(data.rows());
  if (n < 1) fail(ErrorCode::invalid_argument, "kmeans++ on empty data");
  Matrix centers(k, data.cols());
  centers.row(0) = data.row(rng.uniform_int(0, n - 1));
  Vector dist2(n);
  for (int i = 0; i < n; ++i) dist2(i) = (data.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    int pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += dist2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_int(0, n - 1));
    }
    centers.row(c) = data.row(pick);
    for (int i = 0; i < n; ++i) {
      dist2(i) = std::min(dist2(i), (data.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return hard_assignment_step(data, centers, anisotropic);
}

GmmParams random_init(const Matrix& data, int k, Rng& rng, bool anisotropic) {
  const int n = static_cast<int>(data.rows());
  if (n < 1) fail(ErrorCode::invalid_argument, "random init on empty data");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Matrix means(k, data.cols());
  // Partial Fisher-Yates; falls back to repeats when k > n.
  for (int c = 0; c < k; ++c) {
    if (c < n) {
      const auto j = rng.uniform_int(c, n - 1);
      std::swap(idx[c], idx[j]);
      means.row(c) = data.row(idx[c]);
    } else {
      means.row(c) = data.row(rng.uniform_int(0, n - 1));
    }
  }
  return uniform_weights(means, anisotropic);
}

GmmParams oracle_init(const GmmParams& truth, Rng& rng) {
  const int k = truth.k();
  const int d = truth.dim();
  const double sep = min_separation(truth.means);
  const double radius = std::isfinite(sep) ? sep / 16.0 : 0.5;
  GmmParams out = truth;
  for (int c = 0; c < k; ++c) {
    const double r = radius * std::pow(rng.uniform(), 1.0 / d);
    out.means.row(c) += r * rng.unit_vector(d).transpose();
    out.weights(c) *= 1.0 + rng.uniform(-0.15, 0.15);
  }
  out.weights /= out.weights.sum();
  return out;
}

GmmParams initialize(const Matrix& data, int k, InitStrategy strategy,
                     Rng& rng, const GmmParams* truth, bool anisotropic) {
  switch (strategy) {
    case InitStrategy::kmeanspp: return kmeanspp_init(data, k, rng, anisotropic);
    case InitStrategy::random: return random_init(data, k, rng, anisotropic);
    case InitStrategy::oracle: {
      if (truth == nullptr) {
        fail(ErrorCode::invalid_argument, "oracle init requires ground truth");
      }
      if (truth->k() != k) fail(ErrorCode::invalid_argument, "truth K != k");
      GmmParams p = oracle_init(*truth, rng);
      if (anisotropic && !p.scales) p.scales = Matrix::Ones(k, truth->dim());
      return p;
    }
  }
  fail(ErrorCode::invalid_argument, "unknown init strategy");
}

}  // namespace gmmtf

#include "gmmtf/sampler.hpp"

#include <cmath>
#include <string>

namespace gmmtf {

void SamplerConfig::validate() const {
  if (d < 1) fail(ErrorCode::invalid_argument, "sampler: d < 1");
  if (k_set.empty()) fail(ErrorCode::invalid_argument, "sampler: empty k_set");
  for (int k : k_set) {
    if (k < 1) fail(ErrorCode::invalid_argument, "sampler: k < 1 in k_set");
  }
  if (!(cos_threshold > 0.0 && cos_threshold <= 1.0)) {
    fail(ErrorCode::invalid_argument, "sampler: cos_threshold outside (0,1]");
  }
  if (!(weight_lo > 0.0 && weight_hi < 1.0 && weight_lo < weight_hi)) {
    fail(ErrorCode::invalid_argument, "sampler: bad weight_range");
  }
  if (n_max < 2) fail(ErrorCode::invalid_argument, "sampler: n_max < 2");
  if (!(mean_box > 0.0)) fail(ErrorCode::invalid_argument, "sampler: mean_box <= 0");
}

double max_pairwise_cosine(const Matrix& means) {
  double worst = -1.0;
  for (int a = 0; a < means.rows(); ++a) {
    for (int b = a + 1; b < means.rows(); ++b) {
      const double na = means.row(a).norm();
      const double nb = means.row(b).norm();
      const double c = (na > 0.0 && nb > 0.0)
                           ? means.row(a).dot(means.row(b)) / (na * nb)
                           : 0.0;
      worst = std::max(worst, c);
    }
  }
  return worst;
}

Matrix sample_means(int d, int k, const SamplerConfig& config, Rng& rng) {
  if (d < 1 || k < 1) fail(ErrorCode::invalid_argument, "sample_means: d, k >= 1");
  Matrix means(k, d);
  for (int attempt = 0; attempt < kMaxMeanAttempts; ++attempt) {
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < d; ++j)
        means(c, j) = rng.uniform(-config.mean_box, config.mean_box);
    if (k == 1 || max_pairwise_cosine(means) <= config.cos_threshold) {
      return means;
    }
  }
  fail(ErrorCode::sampling_exhausted,
       "no mean set with pairwise cosine <= " +
           std::to_string(config.cos_threshold) + " after " +
           std::to_string(kMaxMeanAttempts) + " attempts (d=" +
           std::to_string(d) + ", K=" + std::to_string(k) + ")");
}

Vector sample_mixing(int k, const SamplerConfig& config, Rng& rng) {
  if (k < 1) fail(ErrorCode::invalid_argument, "sample_mixing: k >= 1");
  Vector w(k);
  for (int c = 0; c < k; ++c) w(c) = rng.uniform(config.weight_lo, config.weight_hi);
  return w / w.sum();
}

Matrix sample_scales(int d, int k, Rng& rng) {
  Matrix s(k, d);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) {
      const double u = rng.uniform(-1.0, 1.0);
      s(c, j) = std::log1p(std::exp(u));
    }
  return s;
}

GmmParams perturb_means(const GmmParams& params, double sigma_p, Rng& rng) {
  if (!(sigma_p >= 0.0)) fail(ErrorCode::invalid_argument, "sigma_p < 0");
  GmmParams out = params;
  if (sigma_p == 0.0) return out;
  for (int c = 0; c < out.k(); ++c) {
    out.means.row(c) += sigma_p * rng.normal_vector(out.dim()).transpose();
  }
  return out;
}

Sample sample_gmm_data(const GmmParams& params, int n, Rng& rng) {
  if (n < 1) fail(ErrorCode::invalid_argument, "sample_gmm_data: n >= 1");
  const int d = params.dim();
  const int k = params.k();
  Vector cumulative(k);
  double acc = 0.0;
  for (int c = 0; c < k; ++c) {
    acc += params.weights(c);
    cumulative(c) = acc;
  }
  Sample out{Matrix(n, d), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    int label = 0;
    while (label < k - 1 && !(u < cumulative(label))) ++label;
    out.labels[i] = label;
    for (int j = 0; j < d; ++j) {
      const double z = rng.normal();
      const double s = params.scales ? (*params.scales)(label, j) : 1.0;
      out.data(i, j) = params.means(label, j) + s * z;
    }
  }
  return out;
}

Task sample_task(const SamplerConfig& config, Rng& rng) {
  config.validate();
  const auto ki = rng.uniform_int(0, static_cast<std::int64_t>(config.k_set.size()) - 1);
  const int k = config.k_set[static_cast<std::size_t>(ki)];
  Task task;
  task.k = k;
  task.truth.means = sample_means(config.d, k, config, rng);
  task.truth.weights = sample_mixing(k, config, rng);
  if (config.anisotropic) task.truth.scales = sample_scales(config.d, k, rng);
  const int n_lo = (config.n_max + 1) / 2;
  const int n = static_cast<int>(rng.uniform_int(n_lo, config.n_max));
  Sample s = sample_gmm_data(task.truth, n, rng);
  task.data = std::move(s.data);
  task.labels = std::move(s.labels);
  return task;
}

Task sample_task_indexed(const SamplerConfig& config, std::uint64_t index) {
  Rng rng = Rng::stream(config.seed, index);
  return sample_task(config, rng);
}

}  // namespace gmmtf

#pragma once

#include <cstdint>
#include <vector>

#include "gmmtf/core.hpp"
#include "gmmtf/rng.hpp"

namespace gmmtf {

struct SamplerConfig {
  int d = 2;
  std::vector<int> k_set{2, 3, 4, 5};
  double mean_box = 5.0;       // means uniform on [-mean_box, mean_box]^d
  double cos_threshold = 0.8;  // max pairwise cosine similarity of means
  double weight_lo = 0.2;
  double weight_hi = 0.8;
  int n_max = 128;             // N uniform on [ceil(n_max/2), n_max]
  bool anisotropic = false;
  std::uint64_t seed = 0;

  // Throws invalid_argument on a malformed config.
  void validate() const;
};

struct Sample {
  Matrix data;              // N x d
  std::vector<int> labels;  // generating component per row
};

inline constexpr int kMaxMeanAttempts = 100000;

// K uniform over k_set, then means, weights, N and data.
Task sample_task(const SamplerConfig& config, Rng& rng);

// Task i of a run seeded with config.seed, drawn from its own stream.
Task sample_task_indexed(const SamplerConfig& config, std::uint64_t index);

// Means uniform on the cube; the whole set is redrawn until every pairwise
// cosine similarity is <= cos_threshold.
Matrix sample_means(int d, int k, const SamplerConfig& config, Rng& rng);

Vector sample_mixing(int k, const SamplerConfig& config, Rng& rng);

// sigma = softplus(u), u ~ U[-1, 1]^d per component.
Matrix sample_scales(int d, int k, Rng& rng);

// mu_k + sigma_p * eps_k, eps_k standard normal.
GmmParams perturb_means(const GmmParams& params, double sigma_p, Rng& rng);

// Weights need not be strictly inside (0,1) here: a zero-weight component is
// simply never drawn.
Sample sample_gmm_data(const GmmParams& params, int n, Rng& rng);

double max_pairwise_cosine(const Matrix& means);

}  // namespace gmmtf

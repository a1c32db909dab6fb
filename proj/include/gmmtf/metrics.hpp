#pragma once

#include <vector>

#include "gmmtf/core.hpp"

namespace gmmtf {

struct Assignment {
  // perm[i] = column matched to row i.
  std::vector<int> perm;
  double cost = 0.0;
};

// Minimum-cost perfect matching on a square matrix (shortest augmenting path
// with row/column potentials). Throws invalid_argument on non-finite input.
Assignment solve_assignment(const Matrix& cost);

// Alignment sigma with est component perm[k] matched to truth component k,
// chosen on squared mean distances only.
std::vector<int> align_components(const GmmParams& est, const GmmParams& truth);

// (1/K) sum_k [ |mu_hat - mu|^2 / d + (pi_hat - pi)^2 (+ |sigma_hat - sigma|^2 / d) ]
double l2_error(const GmmParams& est, const GmmParams& truth);

// Fraction of points whose argmax-posterior cluster matches the aligned label.
double clustering_accuracy(const GmmParams& est, const Matrix& data,
                           const std::vector<int>& labels);

// Average log-likelihood.
double log_likelihood(const Matrix& data, const GmmParams& params);

struct TrainingLoss {
  double mean_loss = 0.0;    // mean square error over aligned means
  double weight_loss = 0.0;  // -sum_k pi_k log pi_hat_sigma(k)
  double scale_loss = 0.0;   // anisotropic only
  bool clamped = false;      // some pi_hat <= 0 was clamped to 1e-12

  double total() const { return mean_loss + weight_loss + scale_loss; }
};

inline constexpr double kWeightClamp = 1e-12;

TrainingLoss training_loss(const GmmParams& est, const GmmParams& truth);

}  // namespace gmmtf

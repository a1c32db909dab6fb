#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmmtf/types.hpp"

namespace gmmtf {

// Mixture parameters. Means and scales are stored one component per row
// (K x d). Absent scales mean isotropic unit variance.
struct GmmParams {
  Vector weights;
  Matrix means;
  std::optional<Matrix> scales;

  int k() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
  bool anisotropic() const { return scales.has_value(); }

  // Reorders components so that component i of the result is component
  // perm[i] of this.
  GmmParams permuted(const std::vector<int>& perm) const;
};

// One benchmarking unit: data (N x d, row per sample), the generating
// parameters and the component count used for estimation.
struct Task {
  Matrix data;
  GmmParams truth;
  int k = 0;
  std::vector<int> labels;  // generating component of each row, may be empty

  int n() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
};

// Dense symmetric third-order tensor, entries row-major over (i, j, m).
class SymTensor3 {
 public:
  SymTensor3() = default;
  explicit SymTensor3(int dim);

  int dim() const { return dim_; }
  double& operator()(int i, int j, int m) { return entries_[index(i, j, m)]; }
  double operator()(int i, int j, int m) const {
    return entries_[index(i, j, m)];
  }
  const std::vector<double>& entries() const { return entries_; }
  std::vector<double>& entries() { return entries_; }

  // Column T(:, j, m).
  Vector fiber(int j, int m) const;
  double frobenius_norm() const;
  // Max deviation over all six index permutations.
  double asymmetry() const;

  // sum_k lambda_k v_k^{(x)3}
  static SymTensor3 from_rank_one_terms(const Vector& lambdas,
                                        const Matrix& vectors_as_columns);

 private:
  std::size_t index(int i, int j, int m) const {
    return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + m;
  }

  int dim_ = 0;
  std::vector<double> entries_;
};

// log p(x | params), stabilized with log-sum-exp.
double gmm_log_density(const Eigen::Ref<const Vector>& x,
                       const GmmParams& params);

// Per-component log(pi_k) + log phi(x; mu_k, sigma_k).
Vector component_log_terms(const Eigen::Ref<const Vector>& x,
                           const GmmParams& params);

// Every violated invariant of GmmParams; empty means valid.
std::vector<std::string> validate_params(const GmmParams& params);

// Throws invalid_argument listing the violations.
void require_valid(const GmmParams& params);

double log_sum_exp(const Eigen::Ref<const Vector>& values);

}  // namespace gmmtf

#pragma once

#include <vector>

#include "gmmtf/core.hpp"
#include "gmmtf/rng.hpp"

namespace gmmtf {

struct Moments {
  Matrix m2;      // (1/N) sum x x^T - I
  SymTensor3 m3;  // (1/N) sum x^{(x)3} minus the symmetrized identity terms
};

struct WhiteningPair {
  Matrix w;                // U D^{-1/2}, d x K
  Matrix b;                // U D^{1/2},  d x K
  Vector singular_values;  // top K, descending
};

struct EigenPair {
  double lambda = 0.0;
  Vector v;
};

struct TensorPowerOptions {
  int restarts = 20;  // L
  int iters = 50;     // N
};

struct SpectralOptions {
  TensorPowerOptions power;
  double rank_tol = 1e-8;
};

inline constexpr double kDegenerateIterateNorm = 1e-14;

Moments empirical_moments(const Matrix& data);

// Rank-k symmetric eigendecomposition of the symmetrized M2.
WhiteningPair whiten(const Matrix& m2, int k, double rank_tol = 1e-8);

// T(I, b, c) = sum_{j,m} b_j c_m T(:, j, m).
Vector tensor_apply(const SymTensor3& t, const Vector& b, const Vector& c);
// T(A, b, c) = A^T T(I, b, c).
Vector tensor_apply(const SymTensor3& t, const Matrix& a, const Vector& b,
                    const Vector& c);
// T(a, b, c).
double tensor_form(const SymTensor3& t, const Vector& a, const Vector& b,
                   const Vector& c);
// T(W, W, W) for W of shape d x p; the result has dimension p.
SymTensor3 tensor_transform(const SymTensor3& t, const Matrix& w);

// One normalized power step v <- T(I,v,v) / |T(I,v,v)|. Returns false if the
// image norm is below kDegenerateIterateNorm (v is left untouched).
bool power_step(const SymTensor3& t, Vector& v);

// Deflation-based robust tensor power method. Each returned pair has
// lambda >= 0 (sign canonicalized by flipping v). `residual`, if given,
// receives the fully deflated tensor.
std::vector<EigenPair> robust_tensor_decompose(const SymTensor3& t, int k,
                                               const TensorPowerOptions& options,
                                               Rng& rng,
                                               SymTensor3* residual = nullptr);

// Method-of-moments estimate: whiten, decompose M3(W,W,W), then
// pi_k = lambda_k^{-2} (renormalized to the simplex), mu_k = lambda_k B v_k.
GmmParams spectral_estimate(const Matrix& data, int k, Rng& rng,
                            const SpectralOptions& options = {});

}  // namespace gmmtf

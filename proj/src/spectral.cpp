#include "gmmtf/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gmmtf {

Moments empirical_moments(const Matrix& data) {
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  if (n < 1) fail(ErrorCode::invalid_argument, "moments of empty data");
  const double inv_n = 1.0 / n;
  Moments out{Matrix(d, d), SymTensor3(d)};
  out.m2.noalias() = inv_n * (data.transpose() * data);
  out.m2 -= Matrix::Identity(d, d);

  // Raw third moment over i <= j <= m, then mirrored.
  SymTensor3& t = out.m3;
  for (int r = 0; r < n; ++r) {
    const auto x = data.row(r);
    for (int i = 0; i < d; ++i) {
      const double xi = x(i);
      for (int j = i; j < d; ++j) {
        const double xij = xi * x(j);
        for (int m = j; m < d; ++m) t(i, j, m) += xij * x(m);
      }
    }
  }
  const Vector mean = data.colwise().mean().transpose();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int m = j; m < d; ++m) {
        double v = t(i, j, m) * inv_n;
        if (j == m) v -= mean(i);
        if (i == m) v -= mean(j);
        if (i == j) v -= mean(m);
        t(i, j, m) = v;
        t(i, m, j) = v;
        t(j, i, m) = v;
        t(j, m, i) = v;
        t(m, i, j) = v;
        t(m, j, i) = v;
      }
  return out;
}

WhiteningPair whiten(const Matrix& m2, int k, double rank_tol) {
  const int d = static_cast<int>(m2.rows());
  if (m2.cols() != d) fail(ErrorCode::invalid_argument, "whiten: M2 not square");
  if (k < 1) fail(ErrorCode::invalid_argument, "whiten: k < 1");
  if (k > d) {
    fail(ErrorCode::rank_error, "K = " + std::to_string(k) +
                                    " exceeds dimension d = " + std::to_string(d));
  }
  const Matrix sym = 0.5 * (m2 + m2.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    fail(ErrorCode::rank_error, "eigendecomposition of M2 failed");
  }
  // Eigen returns ascending eigenvalues.
  WhiteningPair out;
  out.singular_values.resize(k);
  Matrix u(d, k);
  for (int c = 0; c < k; ++c) {
    out.singular_values(c) = eig.eigenvalues()(d - 1 - c);
    u.col(c) = eig.eigenvectors().col(d - 1 - c);
  }
  const double kth = out.singular_values(k - 1);
  if (!(kth >= rank_tol)) {
    fail(ErrorCode::rank_error, "M2 has effective rank < K (K-th eigenvalue " +
                                    std::to_string(kth) + ")");
  }
  const Vector sq = out.singular_values.array().sqrt();
  out.w = u * sq.cwiseInverse().asDiagonal();
  out.b = u * sq.asDiagonal();
  return out;
}

Vector tensor_apply(const SymTensor3& t, const Vector& b, const Vector& c) {
  const int d = t.dim();
  if (b.size() != d || c.size() != d) {
    fail(ErrorCode::invalid_argument, "tensor_apply: dimension mismatch");
  }
  Vector out = Vector::Zero(d);
  const double* e = t.entries().data();
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double* row = e + (static_cast<std::size_t>(i) * d + j) * d;
      double inner = 0.0;
      for (int m = 0; m < d; ++m) inner += row[m] * c(m);
      acc += b(j) * inner;
    }
    out(i) = acc;
  }
  return out;
}

Vector tensor_apply(const SymTensor3& t, const Matrix& a, const Vector& b,
                    const Vector& c) {
  if (a.rows() != t.dim()) {
    fail(ErrorCode::invalid_argument, "tensor_apply: dimension mismatch");
  }
  return a.transpose() * tensor_apply(t, b, c);
}

double tensor_form(const SymTensor3& t, const Vector& a, const Vector& b,
                   const Vector& c) {
  if (a.size() != t.dim()) {
    fail(ErrorCode::invalid_argument, "tensor_form: dimension mismatch");
  }
  return a.dot(tensor_apply(t, b, c));
}

SymTensor3 tensor_transform(const SymTensor3& t, const Matrix& w) {
  const int d = t.dim();
  const int p = static_cast<int>(w.cols());
  if (w.rows() != d) fail(ErrorCode::invalid_argument, "tensor_transform: dimension mismatch");
  // Contract one mode at a time: d^3 p + d^2 p^2 + d p^3.
  std::vector<double> s1(static_cast<std::size_t>(d) * d * p, 0.0);  // (i, j, c)
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int m = 0; m < d; ++m) {
        const double v = t(i, j, m);
        for (int c = 0; c < p; ++c) s1[(static_cast<std::size_t>(i) * d + j) * p + c] += v * w(m, c);
      }
  std::vector<double> s2(static_cast<std::size_t>(d) * p * p, 0.0);  // (i, b, c)
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int bb = 0; bb < p; ++bb) {
        const double wj = w(j, bb);
        for (int c = 0; c < p; ++c)
          s2[(static_cast<std::size_t>(i) * p + bb) * p + c] += wj * s1[(static_cast<std::size_t>(i) * d + j) * p + c];
      }
  SymTensor3 out(p);
  for (int a = 0; a < p; ++a)
    for (int i = 0; i < d; ++i) {
      const double wi = w(i, a);
      for (int bb = 0; bb < p; ++bb)
        for (int c = 0; c < p; ++c) out(a, bb, c) += wi * s2[(static_cast<std::size_t>(i) * p + bb) * p + c];
    }
  return out;
}

bool power_step(const SymTensor3& t, Vector& v) {
  Vector next = tensor_apply(t, v, v);
  const double norm = next.norm();
  if (!(norm >= kDegenerateIterateNorm)) return false;
  v = next / norm;
  return true;
}

namespace {

constexpr int kRedrawsPerTrajectory = 5;

// Runs `iters` power steps from a random start, redrawing the start when the
// iterate degenerates. Returns false if every redraw degenerated.
bool run_trajectory(const SymTensor3& t, int iters, Rng& rng, Vector& v) {
  for (int draw = 0; draw < kRedrawsPerTrajectory; ++draw) {
    v = rng.unit_vector(t.dim());
    bool ok = true;
    for (int it = 0; it < iters && ok; ++it) ok = power_step(t, v);
    if (ok) return true;
  }
  return false;
}

}  // namespace

std::vector<EigenPair> robust_tensor_decompose(const SymTensor3& tensor, int k,
                                               const TensorPowerOptions& options,
                                               Rng& rng, SymTensor3* residual) {
  if (k < 1 || options.restarts < 1 || options.iters < 1) {
    fail(ErrorCode::invalid_argument, "robust_tensor_decompose: k, L, N must be >= 1");
  }
  SymTensor3 t = tensor;
  const int d = t.dim();
  std::vector<EigenPair> pairs;
  pairs.reserve(k);
  for (int round = 0; round < k; ++round) {
    Vector best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int tau = 0; tau < options.restarts; ++tau) {
      Vector v;
      if (!run_trajectory(t, options.iters, rng, v)) continue;
      const double value = tensor_form(t, v, v, v);
      if (value > best_value) {
        best_value = value;
        best = v;
      }
    }
    if (best.size() == 0) {
      fail(ErrorCode::decomposition_failure,
           "all power-iteration restarts degenerated in round " + std::to_string(round));
    }
    for (int it = 0; it < options.iters; ++it) {
      if (!power_step(t, best)) break;
    }
    EigenPair pair{tensor_form(t, best, best, best), best};
    if (pair.lambda < 0.0) {
      pair.lambda = -pair.lambda;
      pair.v = -pair.v;
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int m = 0; m < d; ++m) t(i, j, m) -= pair.lambda * pair.v(i) * pair.v(j) * pair.v(m);
    pairs.push_back(std::move(pair));
  }
  if (residual != nullptr) *residual = std::move(t);
  return pairs;
}

GmmParams spectral_estimate(const Matrix& data, int k, Rng& rng,
                            const SpectralOptions& options) {
  if (k > data.cols()) {
    fail(ErrorCode::rank_error, "K = " + std::to_string(k) + " exceeds dimension d = " +
                                    std::to_string(data.cols()));
  }
  const Moments moments = empirical_moments(data);
  const WhiteningPair white = whiten(moments.m2, k, options.rank_tol);
  const SymTensor3 whitened = tensor_transform(moments.m3, white.w);
  const auto pairs = robust_tensor_decompose(whitened, k, options.power, rng);

  GmmParams out;
  out.weights.resize(k);
  out.means.resize(k, data.cols());
  for (int c = 0; c < k; ++c) {
    const double lambda = pairs[c].lambda;
    if (!(lambda > 1e-12) || !std::isfinite(lambda)) {
      fail(ErrorCode::decomposition_failure, "non-positive tensor eigenvalue");
    }
    out.weights(c) = 1.0 / (lambda * lambda);
    out.means.row(c) = (lambda * (white.b * pairs[c].v)).transpose();
  }
  out.weights /= out.weights.sum();
  return out;
}

}  // namespace gmmtf

#include "gmmtf/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gmmtf/em.hpp"

namespace gmmtf {

Assignment solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols() || cost.rows() < 1) {
    fail(ErrorCode::invalid_argument, "assignment cost must be a nonempty square matrix");
  }
  if (!cost.allFinite()) fail(ErrorCode::invalid_argument, "assignment cost has non-finite entries");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int i0 = match[col0];
      double delta = inf;
      int col1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  Assignment out;
  out.perm.assign(n, 0);
  for (int j = 1; j <= n; ++j) out.perm[match[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) out.cost += cost(i, out.perm[i]);
  return out;
}

namespace {

void require_same_shape(const GmmParams& est, const GmmParams& truth) {
  if (est.k() != truth.k()) {
    fail(ErrorCode::invalid_argument, "component count mismatch: " + std::to_string(est.k()) +
                                          " vs " + std::to_string(truth.k()));
  }
  if (est.dim() != truth.dim()) fail(ErrorCode::invalid_argument, "dimension mismatch");
}

}  // namespace

std::vector<int> align_components(const GmmParams& est, const GmmParams& truth) {
  require_same_shape(est, truth);
  const int k = truth.k();
  Matrix cost(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) cost(i, j) = (est.means.row(j) - truth.means.row(i)).squaredNorm();
  return solve_assignment(cost).perm;
}

double l2_error(const GmmParams& est, const GmmParams& truth) {
  const std::vector<int> sigma = align_components(est, truth);
  const int k = truth.k();
  const double d = truth.dim();
  const bool scales = est.anisotropic() && truth.anisotropic();
  double acc = 0.0;
  for (int c = 0; c < k; ++c) {
    const int e = sigma[c];
    acc += (est.means.row(e) - truth.means.row(c)).squaredNorm() / d;
    const double dw = est.weights(e) - truth.weights(c);
    acc += dw * dw;
    if (scales) acc += (est.scales->row(e) - truth.scales->row(c)).squaredNorm() / d;
  }
  return acc / k;
}

double clustering_accuracy(const GmmParams& est, const Matrix& data,
                           const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != data.rows()) {
    fail(ErrorCode::invalid_argument, "labels length != N");
  }
  const int k = est.k();
  const int n = static_cast<int>(data.rows());
  if (n == 0) return 1.0;
  const Responsibilities resp = e_step(data, est);
  Matrix counts = Matrix::Zero(k, k);  // truth label x estimated cluster
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      fail(ErrorCode::invalid_argument, "label outside [0, K)");
    }
    Eigen::Index cluster = 0;
    resp.row(i).maxCoeff(&cluster);
    counts(labels[i], cluster) += 1.0;
  }
  const Assignment a = solve_assignment(-counts);
  return -a.cost / n;
}

double log_likelihood(const Matrix& data, const GmmParams& params) {
  if (data.cols() != params.dim()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  if (data.rows() == 0) fail(ErrorCode::invalid_argument, "empty data");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    acc += gmm_log_density(data.row(i).transpose(), params);
  }
  return acc / static_cast<double>(data.rows());
}

TrainingLoss training_loss(const GmmParams& est, const GmmParams& truth) {
  const std::vector<int> sigma = align_components(est, truth);
  const int k = truth.k();
  const double d = truth.dim();
  TrainingLoss out;
  for (int c = 0; c < k; ++c) {
    const int e = sigma[c];
    out.mean_loss += (est.means.row(e) - truth.means.row(c)).squaredNorm() / d;
    double w = est.weights(e);
    if (!(w > 0.0)) {
      w = kWeightClamp;
      out.clamped = true;
    }
    out.weight_loss -= truth.weights(c) * std::log(w);
    if (est.anisotropic() && truth.anisotropic()) {
      out.scale_loss += (est.scales->row(e) - truth.scales->row(c)).squaredNorm() / d;
    }
  }
  out.mean_loss /= k;
  out.scale_loss /= k;
  return out;
}

}  // namespace gmmtf

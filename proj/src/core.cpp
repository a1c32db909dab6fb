#include "gmmtf/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gmmtf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::sampling_exhausted: return "sampling-exhausted";
    case ErrorCode::degenerate_component: return "degenerate-component";
    case ErrorCode::rank_error: return "rank-error";
    case ErrorCode::decomposition_failure: return "decomposition-failure";
    case ErrorCode::capacity_error: return "capacity-error";
    case ErrorCode::overflow_error: return "overflow-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

GmmParams GmmParams::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != k()) {
    fail(ErrorCode::invalid_argument, "permutation length != K");
  }
  GmmParams out;
  out.weights.resize(k());
  out.means.resize(k(), dim());
  if (scales) out.scales = Matrix(k(), dim());
  for (int i = 0; i < k(); ++i) {
    out.weights(i) = weights(perm[i]);
    out.means.row(i) = means.row(perm[i]);
    if (scales) out.scales->row(i) = scales->row(perm[i]);
  }
  return out;
}

SymTensor3::SymTensor3(int dim)
    : dim_(dim), entries_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {
  if (dim < 1) fail(ErrorCode::invalid_argument, "tensor dimension < 1");
}

Vector SymTensor3::fiber(int j, int m) const {
  Vector out(dim_);
  for (int i = 0; i < dim_; ++i) out(i) = (*this)(i, j, m);
  return out;
}

double SymTensor3::frobenius_norm() const {
  double s = 0.0;
  for (double e : entries_) s += e * e;
  return std::sqrt(s);
}

double SymTensor3::asymmetry() const {
  double worst = 0.0;
  const auto& t = *this;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int m = 0; m < dim_; ++m) {
        const double v = t(i, j, m);
        for (double w : {t(i, m, j), t(j, i, m), t(j, m, i), t(m, i, j),
                         t(m, j, i)}) {
          worst = std::max(worst, std::abs(v - w));
        }
      }
  return worst;
}

SymTensor3 SymTensor3::from_rank_one_terms(const Vector& lambdas,
                                           const Matrix& vectors) {
  if (lambdas.size() != vectors.cols()) {
    fail(ErrorCode::invalid_argument, "lambda count != vector count");
  }
  const int d = static_cast<int>(vectors.rows());
  SymTensor3 t(d);
  for (int r = 0; r < lambdas.size(); ++r) {
    const auto v = vectors.col(r);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int m = 0; m < d; ++m) t(i, j, m) += lambdas(r) * v(i) * v(j) * v(m);
  }
  return t;
}

double log_sum_exp(const Eigen::Ref<const Vector>& values) {
  const double mx = values.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((values.array() - mx).exp().sum());
}

Vector component_log_terms(const Eigen::Ref<const Vector>& x,
                           const GmmParams& params) {
  const int d = params.dim();
  if (x.size() != d) {
    fail(ErrorCode::invalid_argument, "point dimension does not match params");
  }
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi);
  Vector terms(params.k());
  for (int c = 0; c < params.k(); ++c) {
    const Vector diff = x - params.means.row(c).transpose();
    double quad;
    double log_det = 0.0;
    if (params.scales) {
      const Vector s = params.scales->row(c).transpose();
      quad = (diff.array() / s.array()).square().sum();
      log_det = s.array().log().sum();
    } else {
      quad = diff.squaredNorm();
    }
    terms(c) = std::log(params.weights(c)) + log_norm - log_det - 0.5 * quad;
  }
  return terms;
}

double gmm_log_density(const Eigen::Ref<const Vector>& x,
                       const GmmParams& params) {
  return log_sum_exp(component_log_terms(x, params));
}

std::vector<std::string> validate_params(const GmmParams& params) {
  std::vector<std::string> out;
  const int k = params.k();
  if (k < 1) out.emplace_back("K < 1");
  if (params.dim() < 1) out.emplace_back("dimension < 1");
  if (params.means.rows() != k) out.emplace_back("mean count != K");
  if (k >= 1) {
    const double sum = params.weights.sum();
    if (!(std::abs(sum - 1.0) <= 1e-12)) {
      std::ostringstream os;
      os << "weights sum != 1 (sum = " << sum << ")";
      out.push_back(os.str());
    }
    for (int i = 0; i < k; ++i) {
      const double w = params.weights(i);
      // K = 1 forces the single weight to 1.
      const bool ok = k == 1 ? w == 1.0 : (w > 0.0 && w < 1.0);
      if (!ok) {
        out.push_back("weight " + std::to_string(i) + " outside (0,1)");
      }
    }
  }
  if (!params.means.allFinite()) out.emplace_back("non-finite mean");
  if (params.scales) {
    const Matrix& s = *params.scales;
    if (s.rows() != params.means.rows() || s.cols() != params.means.cols()) {
      out.emplace_back("scale shape != mean shape");
    } else if (!(s.array() > 0.0).all()) {
      out.emplace_back("nonpositive scale");
    } else if (!s.allFinite()) {
      out.emplace_back("non-finite scale");
    }
  }
  return out;
}

void require_valid(const GmmParams& params) {
  const auto violations = validate_params(params);
  if (violations.empty()) return;
  std::string msg = "invalid GMM parameters:";
  for (const auto& v : violations) msg += " " + v + ";";
  fail(ErrorCode::invalid_argument, msg);
}

}  // namespace gmmtf

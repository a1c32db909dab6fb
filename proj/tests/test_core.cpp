#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gmmtf/core.hpp"
#include "gmmtf/rng.hpp"

using namespace gmmtf;

namespace {

GmmParams make(std::initializer_list<double> w, Matrix means) {
  GmmParams p;
  p.weights = Vector::Map(std::data(w), static_cast<Eigen::Index>(w.size()));
  p.means = std::move(means);
  return p;
}

// Direct sum of pi_k N(x; mu_k, diag(sigma_k^2)).
double direct_density(const Vector& x, const GmmParams& p) {
  double acc = 0.0;
  const int d = p.dim();
  for (int k = 0; k < p.k(); ++k) {
    double dens = 1.0;
    for (int j = 0; j < d; ++j) {
      const double s = p.scales ? (*p.scales)(k, j) : 1.0;
      const double z = (x(j) - p.means(k, j)) / s;
      dens *= std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * s);
    }
    acc += p.weights(k) * dens;
  }
  return acc;
}

}  // namespace

TEST_CASE("log density of a standard normal at its mode") {
  const GmmParams p = make({1.0}, Matrix::Zero(1, 1));
  CHECK(gmm_log_density(Vector::Zero(1), p) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(gmm_log_density(Vector::Zero(1), p) == doctest::Approx(-0.918939).epsilon(1e-6));
}

TEST_CASE("symmetric two-component density at the midpoint") {
  Matrix m(2, 1);
  m << -1, 1;
  const GmmParams p = make({0.5, 0.5}, m);
  CHECK(gmm_log_density(Vector::Zero(1), p) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) - 0.5).epsilon(1e-14));
}

TEST_CASE("log density matches direct summation") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    GmmParams p;
    p.means = Matrix(3, 2);
    for (int i = 0; i < 6; ++i) p.means(i) = rng.uniform(-3, 3);
    p.weights = Vector(3);
    for (int i = 0; i < 3; ++i) p.weights(i) = rng.uniform(0.2, 0.8);
    p.weights /= p.weights.sum();
    if (trial % 2) {
      p.scales = Matrix(3, 2);
      for (int i = 0; i < 6; ++i) (*p.scales)(i) = rng.uniform(0.3, 2.0);
    }
    Vector x(2);
    x << rng.uniform(-4, 4), rng.uniform(-4, 4);
    const double direct = direct_density(x, p);
    CHECK(std::exp(gmm_log_density(x, p)) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("log density survives high dimension") {
  // Every component exponent is around -1e3 here; a raw product underflows.
  GmmParams p;
  p.weights = Vector::Constant(2, 0.5);
  p.means = Matrix::Constant(2, 128, 4.0);
  p.means.row(1) *= -1.0;
  const double v = gmm_log_density(Vector::Zero(128), p);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(-64.0 * std::log(2.0 * std::numbers::pi) - 0.5 * 128 * 16).epsilon(1e-12));
}

TEST_CASE("dimension mismatch is rejected") {
  const GmmParams p = make({1.0}, Matrix::Zero(1, 2));
  CHECK_THROWS_AS(gmm_log_density(Vector::Zero(3), p), Error);
}

TEST_CASE("validate_params reports each violation") {
  Matrix m = Matrix::Zero(2, 2);
  CHECK(validate_params(make({0.5, 0.5}, m)).empty());

  const auto bad_sum = validate_params(make({0.6, 0.6}, m));
  REQUIRE_FALSE(bad_sum.empty());
  CHECK(bad_sum.front().find("weights sum != 1") != std::string::npos);

  GmmParams s = make({0.5, 0.5}, m);
  s.scales = Matrix::Ones(2, 2);
  (*s.scales)(1, 0) = 0.0;
  const auto bad_scale = validate_params(s);
  REQUIRE(bad_scale.size() == 1);
  CHECK(bad_scale.front() == "nonpositive scale");

  CHECK_FALSE(validate_params(make({1.0, 0.0}, m)).empty());
  CHECK(validate_params(make({1.0}, Matrix::Zero(1, 3))).empty());
  CHECK_THROWS_AS(require_valid(make({0.6, 0.6}, m)), Error);
}

TEST_CASE("density is invariant under component permutation") {
  Rng rng(5);
  GmmParams p;
  p.weights = Vector(4);
  p.weights << 0.1, 0.2, 0.3, 0.4;
  p.means = Matrix(4, 3);
  for (int i = 0; i < 12; ++i) p.means(i) = rng.normal();
  p.scales = Matrix::Constant(4, 3, 1.3);
  const GmmParams q = p.permuted({2, 0, 3, 1});
  CHECK(q.weights(0) == 0.3);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.normal_vector(3);
    CHECK(gmm_log_density(x, p) == doctest::Approx(gmm_log_density(x, q)).epsilon(1e-13));
  }
}

TEST_CASE("one-dimensional mixtures integrate to one") {
  Rng rng(9);
  for (int k = 1; k <= 5; ++k) {
    GmmParams p;
    p.weights = Vector(k);
    for (int i = 0; i < k; ++i) p.weights(i) = rng.uniform(0.2, 0.8);
    p.weights /= p.weights.sum();
    p.means = Matrix(k, 1);
    for (int i = 0; i < k; ++i) p.means(i, 0) = rng.uniform(-5, 5);
    // Trapezoid rule on [-20, 20].
    const int steps = 40000;
    const double h = 40.0 / steps;
    double acc = 0.0;
    for (int s = 0; s <= steps; ++s) {
      Vector x(1);
      x(0) = -20.0 + s * h;
      const double w = (s == 0 || s == steps) ? 0.5 : 1.0;
      acc += w * std::exp(gmm_log_density(x, p));
    }
    CHECK(std::abs(acc * h - 1.0) <= 1e-3);
  }
}

TEST_CASE("log_sum_exp is stable") {
  Vector v(3);
  v << 1000.0, 1000.0, -1e300;
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("rank-one tensor terms give a symmetric tensor") {
  Vector lambdas(2);
  lambdas << 3.0, -1.5;
  Matrix vecs(3, 2);
  vecs << 1, 0.2, 0.5, -1, 0.3, 0.7;
  const SymTensor3 t = SymTensor3::from_rank_one_terms(lambdas, vecs);
  CHECK(t.asymmetry() <= 1e-15);
  CHECK(t(0, 1, 2) == doctest::Approx(3.0 * 1 * 0.5 * 0.3 - 1.5 * 0.2 * -1 * 0.7));
  const Vector f = t.fiber(1, 2);
  CHECK(f(0) == doctest::Approx(t(0, 1, 2)));
}

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gmmtf/em.hpp"
#include "gmmtf/sampler.hpp"

using namespace gmmtf;

namespace {

GmmParams symmetric_pair() {
  GmmParams p;
  p.weights = Vector::Constant(2, 0.5);
  p.means = Matrix(2, 1);
  p.means << -1, 1;
  return p;
}

Matrix column(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  int i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("e_step on the symmetric pair") {
  const Responsibilities r = e_step(column({0.0, 1.0}), symmetric_pair());
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  const double e2 = std::exp(-2.0);
  CHECK(r(1, 0) == doctest::Approx(e2 / (1.0 + e2)).epsilon(1e-14));
  CHECK(r(1, 1) == doctest::Approx(1.0 / (1.0 + e2)).epsilon(1e-14));
  CHECK(r(1, 0) == doctest::Approx(0.11920).epsilon(1e-4));
}

TEST_CASE("e_step with one component is exactly one") {
  GmmParams p;
  p.weights = Vector::Ones(1);
  p.means = Matrix::Zero(1, 2);
  Rng rng(1);
  Matrix x(20, 2);
  for (int i = 0; i < 40; ++i) x(i) = 50.0 * rng.normal();
  const Responsibilities r = e_step(x, p);
  CHECK((r.array() == 1.0).all());
}

TEST_CASE("e_step stays finite far from every component") {
  const Responsibilities r = e_step(column({1e4, -1e4}), symmetric_pair());
  CHECK(r.allFinite());
  CHECK(r(0, 1) == doctest::Approx(1.0));
  CHECK(r(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("anisotropic e_step includes the log-determinant") {
  GmmParams p = symmetric_pair();
  p.means << 0, 0;
  p.scales = Matrix(2, 1);
  *p.scales << 1.0, 2.0;
  // At x = 0: ratio of densities is (1/1) / (1/2) = 2.
  const Responsibilities r = e_step(column({0.0}), p);
  CHECK(r(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("m_step with uniform and hard responsibilities") {
  const Matrix x = column({1.0, 2.0, 4.0, 9.0});
  const GmmParams one = m_step(x, Matrix::Ones(4, 1));
  CHECK(one.weights(0) == 1.0);
  CHECK(one.means(0, 0) == doctest::Approx(4.0));

  Matrix hard(4, 2);
  hard << 1, 0, 1, 0, 0, 1, 1, 0;
  const GmmParams two = m_step(x, hard);
  CHECK(two.weights(0) == 0.75);
  CHECK(two.weights(1) == 0.25);
  CHECK(two.means(0, 0) == doctest::Approx((1.0 + 2.0 + 9.0) / 3.0));
  CHECK(two.means(1, 0) == 4.0);
}

TEST_CASE("m_step reports a massless component") {
  const Matrix x = column({1.0, 2.0});
  Matrix r(2, 2);
  r << 1, 0, 1, 0;
  try {
    m_step(x, r);
    FAIL("expected degenerate_component");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_component);
    REQUIRE(e.component().has_value());
    CHECK(*e.component() == 1);
  }
}

TEST_CASE("anisotropic m_step floors the scale") {
  Matrix x(3, 2);
  x << 1, 5, 1, 6, 1, 7;
  const GmmParams p = m_step(x, Matrix::Ones(3, 1), true);
  REQUIRE(p.scales);
  CHECK((*p.scales)(0, 0) == kScaleFloor);
  CHECK((*p.scales)(0, 1) == doctest::Approx(std::sqrt(2.0 / 3.0)));
}

TEST_CASE("constant data with one component converges in one step") {
  const Matrix x = Matrix::Constant(10, 3, 2.5);
  GmmParams init;
  init.weights = Vector::Ones(1);
  init.means = Matrix::Zero(1, 3);
  const EmResult r = run_em(x, 1, init);
  CHECK(r.trace.iterates[1].means.isApprox(Matrix::Constant(1, 3, 2.5)));
  CHECK(r.trace.termination == Termination::converged);
}

TEST_CASE("log-likelihood trace is non-decreasing") {
  SamplerConfig c;
  c.d = 3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    const Task t = sample_task_indexed(c, 0);
    EmOptions opts;
    opts.seed = seed;
    const EmResult r = run_em(t.data, t.k, InitStrategy::random, opts);
    for (std::size_t j = 1; j < r.trace.log_likelihood.size(); ++j) {
      REQUIRE(r.trace.log_likelihood[j] >= r.trace.log_likelihood[j - 1] - 1e-8);
    }
  }
}

TEST_CASE("permuting the init permutes the result") {
  SamplerConfig c;
  c.d = 2;
  c.k_set = {3};
  c.seed = 77;
  const Task t = sample_task_indexed(c, 0);
  Rng rng(3);
  const GmmParams init = kmeanspp_init(t.data, 3, rng);
  const std::vector<int> perm{2, 0, 1};
  const EmResult a = run_em(t.data, 3, init);
  const EmResult b = run_em(t.data, 3, init.permuted(perm));
  const GmmParams expect = a.params.permuted(perm);
  CHECK(b.params.means.isApprox(expect.means, 1e-10));
  CHECK(b.params.weights.isApprox(expect.weights, 1e-10));
}

TEST_CASE("one iteration from the truth barely moves on large samples") {
  GmmParams truth;
  truth.weights = Vector(2);
  truth.weights << 0.4, 0.6;
  truth.means = Matrix(2, 2);
  truth.means << -4, 0, 4, 1;
  Rng rng(21);
  const Sample s = sample_gmm_data(truth, 1000000, rng);
  const GmmParams next = m_step(s.data, e_step(s.data, truth));
  CHECK(parameter_change(truth, next) < 0.01);
}

TEST_CASE("initializations") {
  SamplerConfig c;
  c.d = 4;
  c.k_set = {3};
  c.seed = 5;
  const Task t = sample_task_indexed(c, 0);
  Rng rng(1);

  const GmmParams pp = kmeanspp_init(t.data, 3, rng);
  CHECK(validate_params(pp).empty());

  const GmmParams rnd = random_init(t.data, 3, rng);
  CHECK(validate_params(rnd).empty());
  for (int a = 0; a < 3; ++a) {
    bool found = false;
    for (int i = 0; i < t.n(); ++i) found = found || rnd.means.row(a) == t.data.row(i);
    CHECK(found);
    for (int b = a + 1; b < 3; ++b) CHECK(rnd.means.row(a) != rnd.means.row(b));
  }

  const double radius = min_separation(t.truth.means) / 16.0;
  for (int trial = 0; trial < 200; ++trial) {
    const GmmParams o = oracle_init(t.truth, rng);
    for (int k = 0; k < 3; ++k) {
      REQUIRE((o.means.row(k) - t.truth.means.row(k)).norm() <= radius);
      REQUIRE(std::abs(o.weights(k) - t.truth.weights(k)) <= t.truth.weights(k) / 2.0);
    }
  }
  CHECK_THROWS_AS(initialize(t.data, 3, InitStrategy::oracle, rng, nullptr, false), Error);
  CHECK(parse_init_strategy("kmeanspp") == InitStrategy::kmeanspp);
  CHECK_THROWS_AS(parse_init_strategy("bogus"), Error);
}

TEST_CASE("a hopeless init surfaces degenerate_component after restarts") {
  const Matrix x = column({0.0, 0.1, -0.1, 0.2});
  GmmParams init;
  init.weights = Vector::Constant(2, 0.5);
  init.means = Matrix(2, 1);
  init.means << 0.0, 1e6;
  EmOptions opts;
  opts.max_restarts = 2;
  try {
    run_em(x, 2, init, opts);
    FAIL("expected degenerate_component");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_component);
  }
}

TEST_CASE("run_em validates its options") {
  const Matrix x = column({0.0, 1.0});
  EmOptions opts;
  opts.tol = 0.0;
  CHECK_THROWS_AS(run_em(x, 1, InitStrategy::random, opts), Error);
  opts = {};
  opts.max_iters = 0;
  CHECK_THROWS_AS(run_em(x, 1, InitStrategy::random, opts), Error);
}

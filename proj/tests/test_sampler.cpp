#include <cmath>

#include "doctest.h"
#include "gmmtf/rng.hpp"
#include "gmmtf/sampler.hpp"

using namespace gmmtf;

TEST_CASE("xoshiro256** output is frozen") {
  // Reference values from an independent implementation of splitmix64
  // seeding and xoshiro256**.
  Rng a(0);
  CHECK(a() == 0x99ec5f36cb75f2b4ULL);
  CHECK(a() == 0xbf6e1f784956452aULL);
  CHECK(a() == 0x1a5f849d4933e6e0ULL);
  Rng b = Rng::stream(7, 3);
  CHECK(b() == 0x1b5bf10163d8d49fULL);
  CHECK(b() == 0xe7564002a7bc9e65ULL);
  Rng c(42);
  CHECK(c.uniform() == 0.08386297105988216);
  CHECK(c.uniform() == 0.3789802506626686);
}

TEST_CASE("uniform_int covers its range without bias") {
  Rng rng(3);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) ++counts[rng.uniform_int(-2, 2) + 2];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal draws have unit variance") {
  Rng rng(8);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.01);
}

TEST_CASE("sample_task follows the configured ranges") {
  SamplerConfig c;
  c.k_set = {2};
  Rng rng(17);
  const Task t = sample_task(c, rng);
  CHECK(t.k == 2);
  CHECK(t.truth.k() == 2);
  CHECK(t.n() >= 64);
  CHECK(t.n() <= 128);
  CHECK(t.truth.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(validate_params(t.truth).empty());
  CHECK(static_cast<int>(t.labels.size()) == t.n());
}

TEST_CASE("single-component tasks") {
  SamplerConfig c;
  c.k_set = {1};
  c.d = 3;
  Rng rng(2);
  const Task t = sample_task(c, rng);
  CHECK(t.k == 1);
  CHECK(t.truth.weights(0) == 1.0);
  CHECK(validate_params(t.truth).empty());
}

TEST_CASE("sampled tasks are reproducible") {
  SamplerConfig c;
  c.d = 4;
  c.seed = 99;
  const Task a = sample_task_indexed(c, 5);
  const Task b = sample_task_indexed(c, 5);
  const Task other = sample_task_indexed(c, 6);
  CHECK(a.data == b.data);
  CHECK(a.truth.means == b.truth.means);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(a.truth.means.isApprox(other.truth.means));
}

TEST_CASE("N covers both ends of its integer range") {
  SamplerConfig c;
  c.n_max = 5;  // N in {3, 4, 5}
  bool seen[6] = {};
  for (int i = 0; i < 200; ++i) {
    const int n = sample_task_indexed(c, i).n();
    REQUIRE(n >= 3);
    REQUIRE(n <= 5);
    seen[n] = true;
  }
  CHECK(seen[3]);
  CHECK(seen[5]);
}

TEST_CASE("cosine filter holds for every accepted mean set") {
  SamplerConfig c;
  c.d = 8;
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Matrix m = sample_means(8, 5, c, rng);
    REQUIRE(max_pairwise_cosine(m) <= 0.8);
    REQUIRE(m.cwiseAbs().maxCoeff() <= 5.0);
  }
  const Matrix pair = sample_means(2, 2, c, rng);
  CHECK(max_pairwise_cosine(pair) <= 0.8);
  const Matrix one = sample_means(3, 1, c, rng);
  CHECK(one.rows() == 1);
}

TEST_CASE("infeasible cosine filter is reported") {
  SamplerConfig c;
  c.d = 1;
  c.cos_threshold = 0.5;  // of three scalars two share a sign, cosine 1
  Rng rng(1);
  try {
    sample_means(1, 3, c, rng);
    FAIL("expected sampling_exhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::sampling_exhausted);
  }
}

TEST_CASE("mixing weights") {
  SamplerConfig c;
  Rng rng(6);
  CHECK(sample_mixing(1, c, rng)(0) == 1.0);
  for (int k = 2; k <= 5; ++k) {
    const double floor = 0.2 / (0.2 + 0.8 * (k - 1));
    for (int i = 0; i < 2000; ++i) {
      const Vector w = sample_mixing(k, c, rng);
      REQUIRE(w.minCoeff() >= floor);
    }
  }
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(std::abs(sample_mixing(4, c, rng).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("mean perturbation") {
  GmmParams p;
  p.weights = Vector::Constant(2, 0.5);
  p.means = Matrix::Zero(2, 8);
  Rng rng(10);
  const GmmParams same = perturb_means(p, 0.0, rng);
  CHECK(same.means == p.means);

  double acc = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const GmmParams q = perturb_means(p, 1.0, rng);
    CHECK(q.weights == p.weights);
    acc += (q.means.row(0) - p.means.row(0)).squaredNorm();
  }
  CHECK(std::abs(acc / draws - 8.0) <= 0.05 * 8.0);
}

TEST_CASE("data sampling") {
  Rng rng(12);
  SUBCASE("sample mean of a centred component") {
    GmmParams p;
    p.weights = Vector::Ones(1);
    p.means = Matrix::Zero(1, 3);
    const int n = 100000;
    const Sample s = sample_gmm_data(p, n, rng);
    const Vector mean = s.data.colwise().mean();
    CHECK(mean.norm() <= 3.0 * std::sqrt(3.0) / std::sqrt(n));
  }
  SUBCASE("a zero-weight component is never drawn") {
    GmmParams p;
    p.weights = Vector(2);
    p.weights << 1.0, 0.0;
    p.means = Matrix::Zero(2, 1);
    const Sample s = sample_gmm_data(p, 1000, rng);
    for (int l : s.labels) CHECK(l == 0);
  }
  SUBCASE("anisotropic variance") {
    GmmParams p;
    p.weights = Vector::Ones(1);
    p.means = Matrix::Zero(1, 2);
    p.scales = Matrix(1, 2);
    *p.scales << 2.0, 0.5;
    const Sample s = sample_gmm_data(p, 100000, rng);
    const Vector var = s.data.array().square().colwise().mean();
    CHECK(std::abs(var(0) - 4.0) <= 0.2);
    CHECK(std::abs(var(1) - 0.25) <= 0.0125);
  }
}

TEST_CASE("anisotropic scales are softplus of U[-1, 1]") {
  Rng rng(13);
  const Matrix s = sample_scales(4, 3, rng);
  const double lo = std::log1p(std::exp(-1.0));
  const double hi = std::log1p(std::exp(1.0));
  CHECK(s.minCoeff() >= lo);
  CHECK(s.maxCoeff() <= hi);
}

TEST_CASE("sampler config validation") {
  SamplerConfig c;
  c.cos_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.weight_lo = 0.9;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_max = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gmmtf/rng.hpp"
#include "gmmtf/transformer.hpp"

using namespace gmmtf;

namespace {

Matrix gaussian(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows * cols; ++i) m(i) = scale * rng.normal();
  return m;
}

AttnHead random_head(int d, Rng& rng) {
  return {gaussian(d, d, rng, 0.5), gaussian(d, d, rng, 0.5), gaussian(d, d, rng, 0.5)};
}

// Token-by-token reference with explicit loops.
Matrix attention_oracle(const Matrix& h, const std::vector<AttnHead>& heads,
                        Activation act) {
  const int d = static_cast<int>(h.rows());
  const int n = static_cast<int>(h.cols());
  Matrix out = h;
  for (const AttnHead& hd : heads) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(n);
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int a = 0; a < hd.query.rows(); ++a) {
          double q = 0.0, k = 0.0;
          for (int b = 0; b < d; ++b) {
            q += hd.query(a, b) * h(b, i);
            k += hd.key(a, b) * h(b, j);
          }
          acc += q * k;
        }
        s[j] = acc;
      }
      if (act == Activation::softmax) {
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (double& v : s) z += (v = std::exp(v - mx));
        for (double& v : s) v /= z;
      } else {
        for (double& v : s) v = std::max(v, 0.0) / n;
      }
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < d; ++r) {
          double v = 0.0;
          for (int b = 0; b < d; ++b) v += hd.value(r, b) * h(b, j);
          out(r, i) += s[j] * v;
        }
    }
  }
  return out;
}

Matrix mlp_oracle(const Matrix& h, const Mlp& mlp) {
  Matrix out = h;
  for (int i = 0; i < h.cols(); ++i)
    for (int u = 0; u < mlp.w1.rows(); ++u) {
      double pre = 0.0;
      for (int b = 0; b < h.rows(); ++b) pre += mlp.w1(u, b) * h(b, i);
      if (pre <= 0.0) continue;
      for (int r = 0; r < h.rows(); ++r) out(r, i) += mlp.w2(r, u) * pre;
    }
  return out;
}

}  // namespace

TEST_CASE("zero heads leave tokens unchanged") {
  Rng rng(1);
  const Matrix h = gaussian(4, 6, rng);
  const Layer layer = zero_layer(4, 2, Activation::softmax, 3);
  CHECK(attention_forward(TokenMatrix(h), layer.heads, layer.activation).values() == h);
  CHECK(mlp_forward(TokenMatrix(h), layer.mlp).values() == h);
  TfWeights w;
  w.embed_dim = 4;
  w.layers = {layer, zero_layer(4, 1, Activation::relu_scaled)};
  CHECK(tf_forward(TokenMatrix(h), w).values() == h);
}

TEST_CASE("zero queries give a uniform average under softmax") {
  Matrix h(2, 3);
  h << 1, 2, 6,  //
      0, 3, 0;
  AttnHead hd{Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 2)};
  std::vector<AttnHead> heads{hd};
  const Matrix out = attention_forward(TokenMatrix(h), heads, Activation::softmax).values();
  for (int i = 0; i < 3; ++i) {
    CHECK(out(0, i) == doctest::Approx(h(0, i) + 3.0));
    CHECK(out(1, i) == doctest::Approx(h(1, i) + 1.0));
  }
}

TEST_CASE("attention matches the loop reference") {
  Rng rng(2);
  const Matrix h = gaussian(5, 7, rng);
  std::vector<AttnHead> heads{random_head(5, rng), random_head(5, rng)};
  for (Activation act : {Activation::softmax, Activation::relu_scaled}) {
    const Matrix got = attention_forward(TokenMatrix(h), heads, act).values();
    CHECK((got - attention_oracle(h, heads, act)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("softmax attention is stable for large scores") {
  Matrix h(1, 2);
  h << 100.0, -100.0;
  AttnHead hd{Matrix::Constant(1, 1, 10.0), Matrix::Constant(1, 1, 10.0),
              Matrix::Identity(1, 1)};
  std::vector<AttnHead> heads{hd};
  const Matrix out = attention_forward(TokenMatrix(h), heads, Activation::softmax).values();
  CHECK(out.allFinite());
  CHECK(out(0, 0) == doctest::Approx(200.0));
  CHECK(out(0, 1) == doctest::Approx(-200.0));
}

TEST_CASE("a relu head pair with negated query is linear attention") {
  Rng rng(3);
  const Matrix h = gaussian(4, 9, rng);
  AttnHead hd = random_head(4, rng);
  AttnHead neg{-hd.query, hd.key, -hd.value};
  std::vector<AttnHead> pair{hd, neg};
  const Matrix got = attention_forward(TokenMatrix(h), pair, Activation::relu_scaled).values();
  const Matrix scores = (hd.key * h).transpose() * (hd.query * h);
  const Matrix linear = h + (hd.value * h) * scores / 9.0;
  CHECK((got - linear).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("softmax columns sum to one") {
  Rng rng(4);
  const Matrix s = softmax_columns(gaussian(6, 5, rng, 30.0));
  for (int c = 0; c < 5; ++c) CHECK(s.col(c).sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((s.array() >= 0.0).all());
}

TEST_CASE("attention is equivariant to token permutations") {
  Rng rng(5);
  const Matrix h = gaussian(3, 6, rng);
  std::vector<AttnHead> heads{random_head(3, rng)};
  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Matrix hp(3, 6);
  for (int i = 0; i < 6; ++i) hp.col(i) = h.col(perm[i]);
  for (Activation act : {Activation::softmax, Activation::relu_scaled}) {
    const Matrix a = attention_forward(TokenMatrix(h), heads, act).values();
    const Matrix b = attention_forward(TokenMatrix(hp), heads, act).values();
    for (int i = 0; i < 6; ++i) CHECK((b.col(i) - a.col(perm[i])).norm() < 1e-12);
  }
}

TEST_CASE("mlp cleaning unit pair zeroes a slot") {
  Matrix h(2, 3);
  h << 1.5, -2.0, 0.0,  //
      7.0, 8.0, 9.0;
  Mlp mlp{Matrix(2, 2), Matrix(2, 2)};
  mlp.w1 << 1, 0, -1, 0;
  mlp.w2 << -1, 1, 0, 0;
  const Matrix out = mlp_forward(TokenMatrix(h), mlp).values();
  CHECK(out.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.row(1) == h.row(1));
}

TEST_CASE("mlp matches the loop reference on dense and sparse weights") {
  Rng rng(6);
  const Matrix h = gaussian(8, 40, rng);
  Mlp dense{gaussian(12, 8, rng), gaussian(8, 12, rng)};
  CHECK((mlp_forward(TokenMatrix(h), dense).values() - mlp_oracle(h, dense))
            .cwiseAbs().maxCoeff() < 1e-12);

  Mlp sparse{Matrix::Zero(200, 8), Matrix::Zero(8, 200)};
  for (int u = 0; u < 200; ++u) {
    sparse.w1(u, u % 8) = rng.normal();
    sparse.w2((u * 3) % 8, u) = rng.normal();
  }
  CHECK((mlp_forward(TokenMatrix(h), sparse).values() - mlp_oracle(h, sparse))
            .cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("observer sees every layer") {
  Rng rng(7);
  TfWeights w;
  w.embed_dim = 3;
  for (int l = 0; l < 4; ++l) {
    Layer layer = zero_layer(3, 1, Activation::softmax, 2);
    layer.heads[0] = random_head(3, rng);
    w.layers.push_back(layer);
  }
  const TokenMatrix h(gaussian(3, 5, rng));
  std::vector<int> seen;
  const TokenMatrix out = tf_forward(h, w, [&](int l, const TokenMatrix&) { seen.push_back(l); });
  CHECK(seen == std::vector<int>{0, 1, 2, 3});
  const TokenMatrix half = tf_forward_range(h, w, 0, 2);
  CHECK((tf_forward_range(half, w, 2, 4).values() - out.values()).norm() < 1e-14);
}

TEST_CASE("weights validation catches shape errors") {
  TfWeights w;
  w.embed_dim = 3;
  w.layers.push_back(zero_layer(3, 1, Activation::softmax));
  CHECK_NOTHROW(w.validate());
  w.layers[0].heads[0].value = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(w.validate(), Error);
  w.layers[0] = zero_layer(3, 1, Activation::softmax);
  w.layers[0].mlp.w2 = Matrix::Zero(3, 4);
  CHECK_THROWS_AS(w.validate(), Error);
}

TEST_CASE("weights norm sums operator norms per layer") {
  TfWeights w;
  w.embed_dim = 2;
  Layer layer = zero_layer(2, 2, Activation::softmax, 1);
  layer.heads[0].query = 3.0 * Matrix::Identity(2, 2);
  layer.heads[1].value = 5.0 * Matrix::Identity(2, 2);
  layer.mlp.w1 = Matrix::Constant(1, 2, 1.0);
  w.layers.push_back(layer);
  CHECK(w.norm() == doctest::Approx(5.0 + std::sqrt(2.0)));
  CHECK(w.max_heads() == 2);
  CHECK(w.max_hidden() == 1);
  CHECK(operator_norm(Matrix::Zero(0, 0)) == 0.0);
}

TEST_CASE("linear mean readout is exact") {
  // Tokens carry (1, x); key picks the constant row, query is one.
  Matrix h(2, 4);
  h << 1, 1, 1, 1,  //
      2, 4, 6, 8;
  Readout r;
  r.pooling = Pooling::linear_mean;
  r.value = Matrix(2, 2);
  r.value << 1, 0, 0, 1;
  r.key = Matrix(2, 2);
  r.key << 1, 0, 1, 0;
  r.query = Matrix(2, 1);
  r.query << 0.5, 0.5;
  const Matrix pooled = attentive_pool(TokenMatrix(h), r);
  CHECK(pooled(0, 0) == doctest::Approx(1.0));
  CHECK(pooled(1, 0) == doctest::Approx(5.0));
  const GmmParams p = decode_pooled(pooled, 1, 1);
  CHECK(p.weights(0) == doctest::Approx(1.0));
  CHECK(p.means(0, 0) == doctest::Approx(5.0));
}

TEST_CASE("softmax readout matches a direct computation") {
  Rng rng(8);
  const Matrix h = gaussian(4, 6, rng);
  Readout r{gaussian(5, 4, rng), gaussian(5, 4, rng), gaussian(5, 2, rng), Pooling::softmax};
  const Matrix pooled = attentive_pool(TokenMatrix(h), r);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> s(6);
    double z = 0.0;
    for (int j = 0; j < 6; ++j) z += (s[j] = std::exp((r.key * h.col(j)).dot(r.query.col(k))));
    Vector expect = Vector::Zero(5);
    for (int j = 0; j < 6; ++j) expect += (s[j] / z) * (r.value * h.col(j));
    CHECK((pooled.col(k) - expect).norm() < 1e-12);
  }
  const GmmParams p = decode_pooled(pooled, 2, 3);
  CHECK(p.weights(1) == doctest::Approx(pooled.row(1).mean()));
  CHECK(p.means(1, 2) == doctest::Approx(pooled(4, 1)));
  CHECK_THROWS_AS(decode_pooled(pooled, 2, 2), Error);
  CHECK_THROWS_AS(decode_pooled(pooled, 1, 1, true), Error);
}

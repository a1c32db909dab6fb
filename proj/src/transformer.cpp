#include "gmmtf/transformer.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Sparse>

namespace gmmtf {

TokenMatrix::TokenMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    fail(ErrorCode::invalid_argument, "token matrix must be at least 1 x 1");
  }
}

const char* to_string(Activation a) {
  return a == Activation::softmax ? "softmax" : "relu_scaled";
}

const char* to_string(Pooling p) {
  return p == Pooling::softmax ? "softmax" : "linear_mean";
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (int c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - mx).exp();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // Largest eigenvalue of the smaller Gram matrix.
  const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose())
                                           : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

namespace {

void check_square(const Matrix& m, int d, const char* what) {
  if (m.rows() != d || m.cols() != d) {
    fail(ErrorCode::invalid_argument, std::string(what) + " must be " +
                                          std::to_string(d) + " x " + std::to_string(d));
  }
}

void check_heads(std::span<const AttnHead> heads, int d) {
  for (const auto& head : heads) {
    check_square(head.query, d, "attention Q");
    check_square(head.key, d, "attention K");
    check_square(head.value, d, "attention V");
  }
}

void check_mlp(const Mlp& mlp, int d) {
  if (mlp.w1.cols() != d || mlp.w2.rows() != d || mlp.w2.cols() != mlp.w1.rows()) {
    fail(ErrorCode::invalid_argument, "MLP shapes must be W1: D' x D, W2: D x D'");
  }
}

}  // namespace

void TfWeights::validate() const {
  if (embed_dim < 1) fail(ErrorCode::invalid_argument, "embed_dim < 1");
  for (const auto& layer : layers) {
    check_heads(layer.heads, embed_dim);
    check_mlp(layer.mlp, embed_dim);
  }
  if (readout) {
    const auto& r = *readout;
    if (r.value.cols() != embed_dim || r.key.cols() != embed_dim ||
        r.value.rows() != r.key.rows() || r.query.rows() != r.key.rows()) {
      fail(ErrorCode::invalid_argument, "readout shapes inconsistent");
    }
  }
}

double TfWeights::norm() const {
  double out = 0.0;
  for (const auto& layer : layers) {
    double attn = 0.0;
    for (const auto& head : layer.heads) {
      attn = std::max({attn, operator_norm(head.query), operator_norm(head.key),
                       operator_norm(head.value)});
    }
    out = std::max(out, attn + operator_norm(layer.mlp.w1) + operator_norm(layer.mlp.w2));
  }
  return out;
}

int TfWeights::max_heads() const {
  int out = 0;
  for (const auto& layer : layers) out = std::max(out, static_cast<int>(layer.heads.size()));
  return out;
}

int TfWeights::max_hidden() const {
  int out = 0;
  for (const auto& layer : layers) out = std::max(out, static_cast<int>(layer.mlp.w1.rows()));
  return out;
}

Layer zero_layer(int embed_dim, int heads, Activation activation, int hidden) {
  Layer layer;
  layer.activation = activation;
  for (int m = 0; m < heads; ++m) {
    layer.heads.push_back({Matrix::Zero(embed_dim, embed_dim),
                           Matrix::Zero(embed_dim, embed_dim),
                           Matrix::Zero(embed_dim, embed_dim)});
  }
  layer.mlp.w1 = Matrix::Zero(hidden, embed_dim);
  layer.mlp.w2 = Matrix::Zero(embed_dim, hidden);
  return layer;
}

TokenMatrix attention_forward(const TokenMatrix& h, std::span<const AttnHead> heads,
                              Activation activation) {
  const Matrix& x = h.values();
  check_heads(heads, h.embed_dim());
  Matrix out = x;
  const double inv_n = 1.0 / h.tokens();
  // Query tokens are processed in column blocks so that the N x block score
  // matrix stays small; every output column is computed the same way.
  constexpr int kQueryBlock = 256;
  for (const auto& head : heads) {
    const Matrix q = head.query * x;
    const Matrix kt = (head.key * x).transpose();
    const Matrix v = head.value * x;
    Matrix scores;  // scores(j, i): key token j against query token i.
    for (int c0 = 0; c0 < h.tokens(); c0 += kQueryBlock) {
      const int width = std::min(kQueryBlock, h.tokens() - c0);
      scores.noalias() = kt * q.middleCols(c0, width);
      if (activation == Activation::softmax) {
        out.middleCols(c0, width).noalias() += v * softmax_columns(scores);
      } else {
        out.middleCols(c0, width).noalias() += inv_n * (v * scores.cwiseMax(0.0));
      }
    }
  }
  return TokenMatrix(std::move(out));
}

TokenMatrix mlp_forward(const TokenMatrix& h, const Mlp& mlp) {
  check_mlp(mlp, h.embed_dim());
  Matrix out = h.values();
  // Compiled constructions have a handful of nonzeros per hidden unit; the
  // sparse product skips the exact zeros and gives the same result.
  const Eigen::Index nnz1 = (mlp.w1.array() != 0.0).count();
  const Eigen::Index nnz2 = (mlp.w2.array() != 0.0).count();
  if (mlp.w1.rows() >= 64 && 10 * (nnz1 + nnz2) < mlp.w1.size() + mlp.w2.size()) {
    const Eigen::SparseMatrix<double> w1 = mlp.w1.sparseView();
    const Eigen::SparseMatrix<double> w2 = mlp.w2.sparseView();
    constexpr int kSparseBlock = 64;
    Matrix hidden;
    for (int c0 = 0; c0 < h.tokens(); c0 += kSparseBlock) {
      const int width = std::min(kSparseBlock, h.tokens() - c0);
      hidden.noalias() = w1 * h.values().middleCols(c0, width);
      hidden = hidden.cwiseMax(0.0);
      out.middleCols(c0, width).noalias() += w2 * hidden;
    }
    return TokenMatrix(std::move(out));
  }
  // Column blocks bound the D' x block hidden activation.
  constexpr int kBlock = 256;
  for (int c0 = 0; c0 < h.tokens(); c0 += kBlock) {
    const int width = std::min(kBlock, h.tokens() - c0);
    const Matrix hidden = (mlp.w1 * h.values().middleCols(c0, width)).cwiseMax(0.0);
    out.middleCols(c0, width).noalias() += mlp.w2 * hidden;
  }
  return TokenMatrix(std::move(out));
}

TokenMatrix tf_forward_range(const TokenMatrix& h, const TfWeights& weights,
                             int first, int last) {
  if (h.embed_dim() != weights.embed_dim) {
    fail(ErrorCode::invalid_argument, "token dimension != weight dimension");
  }
  TokenMatrix state = h;
  for (int l = first; l < last; ++l) {
    const Layer& layer = weights.layers[l];
    state = mlp_forward(attention_forward(state, layer.heads, layer.activation), layer.mlp);
  }
  return state;
}

TokenMatrix tf_forward(const TokenMatrix& h, const TfWeights& weights,
                       const LayerObserver& observer) {
  if (h.embed_dim() != weights.embed_dim) {
    fail(ErrorCode::invalid_argument, "token dimension != weight dimension");
  }
  TokenMatrix state = h;
  for (int l = 0; l < static_cast<int>(weights.layers.size()); ++l) {
    state = tf_forward_range(state, weights, l, l + 1);
    if (observer) observer(l, state);
  }
  return state;
}

Matrix attentive_pool(const TokenMatrix& h, const Readout& readout) {
  const Matrix& x = h.values();
  if (readout.value.cols() != x.rows() || readout.key.cols() != x.rows() ||
      readout.query.rows() != readout.key.rows()) {
    fail(ErrorCode::invalid_argument, "readout shapes do not match tokens");
  }
  const Matrix v = readout.value * x;
  const Matrix scores = (readout.key * x).transpose() * readout.query;  // N x K
  if (readout.pooling == Pooling::softmax) return v * softmax_columns(scores);
  return (v * scores) / static_cast<double>(h.tokens());
}

GmmParams decode_pooled(const Matrix& pooled, int k, int d, bool with_scales) {
  const int rows = k + d + (with_scales ? d : 0);
  if (pooled.rows() != rows || pooled.cols() != k) {
    fail(ErrorCode::invalid_argument, "pooled output has shape " +
                                          std::to_string(pooled.rows()) + " x " +
                                          std::to_string(pooled.cols()) + ", expected " +
                                          std::to_string(rows) + " x " + std::to_string(k));
  }
  GmmParams out;
  out.weights = pooled.topRows(k).rowwise().mean();
  out.means = pooled.middleRows(k, d).transpose();
  if (with_scales) out.scales = Matrix(pooled.middleRows(k + d, d).transpose());
  return out;
}

GmmParams attentive_pool_readout(const TokenMatrix& h, const Readout& readout,
                                 int k, int d, bool with_scales) {
  return decode_pooled(attentive_pool(h, readout), k, d, with_scales);
}

}  // namespace gmmtf

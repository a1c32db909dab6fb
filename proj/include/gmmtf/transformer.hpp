#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmmtf/core.hpp"

namespace gmmtf {

// D x N matrix whose columns are tokens.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  explicit TokenMatrix(Matrix values);

  int embed_dim() const { return static_cast<int>(values_.rows()); }
  int tokens() const { return static_cast<int>(values_.cols()); }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  auto token(int i) const { return values_.col(i); }

 private:
  Matrix values_;
};

enum class Activation {
  softmax,      // H + sum_m (V_m H) softmax_cols((K_m H)^T (Q_m H))
  relu_scaled,  // H + (1/N) sum_m (V_m H) relu((K_m H)^T (Q_m H))
};

enum class Pooling {
  softmax,      // O = (V_o H) softmax_cols((K_o H)^T Q_o)
  linear_mean,  // O = (1/N) (V_o H) (K_o H)^T Q_o
};

const char* to_string(Activation a);
const char* to_string(Pooling p);

struct AttnHead {
  Matrix query;
  Matrix key;
  Matrix value;
};

struct Mlp {
  Matrix w1;  // D' x D
  Matrix w2;  // D x D'
};

struct Layer {
  std::vector<AttnHead> heads;
  Activation activation = Activation::softmax;
  Mlp mlp;
};

struct Readout {
  Matrix value;  // P x D, P = K + d (+ d when scales are read out)
  Matrix key;    // P x D
  Matrix query;  // P x K
  Pooling pooling = Pooling::softmax;
};

struct TfWeights {
  int embed_dim = 0;
  std::vector<Layer> layers;
  std::optional<Readout> readout;

  // Throws invalid_argument on any shape inconsistency.
  void validate() const;
  // max over layers of (max_m max(|Q_m|, |K_m|, |V_m|) + |W1| + |W2|), all
  // operator 2-norms.
  double norm() const;
  int max_heads() const;
  int max_hidden() const;
};

// Zero weights of the given shape (identity map).
Layer zero_layer(int embed_dim, int heads, Activation activation, int hidden = 1);

TokenMatrix attention_forward(const TokenMatrix& h, std::span<const AttnHead> heads,
                              Activation activation);

TokenMatrix mlp_forward(const TokenMatrix& h, const Mlp& mlp);

// Called after every layer (attention followed by MLP) with the 0-based layer
// index and the token state.
using LayerObserver = std::function<void(int, const TokenMatrix&)>;

TokenMatrix tf_forward(const TokenMatrix& h, const TfWeights& weights,
                       const LayerObserver& observer = {});

// Applies layers [first, last) only.
TokenMatrix tf_forward_range(const TokenMatrix& h, const TfWeights& weights,
                             int first, int last);

// P x K pooled output.
Matrix attentive_pool(const TokenMatrix& h, const Readout& readout);

// Decodes a pooled output: weights are the row means of the first K rows,
// means are rows K..K+d of each column, scales (if read out) the next d rows.
GmmParams decode_pooled(const Matrix& pooled, int k, int d, bool with_scales = false);

GmmParams attentive_pool_readout(const TokenMatrix& h, const Readout& readout,
                                 int k, int d, bool with_scales = false);

// Column-wise softmax with max subtraction.
Matrix softmax_columns(const Matrix& logits);

double operator_norm(const Matrix& m);

}  // namespace gmmtf

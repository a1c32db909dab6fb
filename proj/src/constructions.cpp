#include "gmmtf/constructions.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace gmmtf {

// ----------------------------------------------------------------- approx --

namespace {

// ceil(q) that is robust to q landing a few ulps above an integer because the
// tolerance is not exactly representable (2 * 100 / 0.01 and the like).
std::int64_t robust_ceil(double q) {
  return static_cast<std::int64_t>(std::ceil(q * (1.0 - 1e-12)));
}

std::int64_t segment_count(ApproxTarget target, double range, double delta,
                           PieceBudget budget) {
  std::int64_t n = 1;
  if (target == ApproxTarget::log) {
    const double span = 2.0 * std::log(range);
    n = budget == PieceBudget::standard ? robust_ceil(span / delta)
                                     : robust_ceil(span / std::sqrt(8.0 * delta));
  } else {
    n = budget == PieceBudget::standard ? robust_ceil(2.0 * range * range / delta)
                                     : robust_ceil(range / std::sqrt(delta));
  }
  return std::max<std::int64_t>(n, 1);
}

}  // namespace

std::int64_t standard_piece_count(ApproxTarget target, double range, double delta) {
  return segment_count(target, range, delta, PieceBudget::standard) + 1;
}

ReluScalarApprox::ReluScalarApprox(ApproxTarget target, double range,
                                   double tolerance, PieceBudget budget)
    : target_(target), range_(range), tolerance_(tolerance), budget_(budget) {
  if (!(range > 1.0)) fail(ErrorCode::invalid_argument, "approximator range must exceed 1");
  if (!(tolerance > 0.0)) fail(ErrorCode::invalid_argument, "approximator tolerance must be > 0");
  segments_ = segment_count(target, range, tolerance, budget);
  log_range_ = std::log(range);
  step_ = target == ApproxTarget::log ? 2.0 * log_range_ / static_cast<double>(segments_)
                                      : 2.0 * range / static_cast<double>(segments_);
}

double ReluScalarApprox::domain_lo() const {
  return target_ == ApproxTarget::log ? 1.0 / range_ : -range_;
}

double ReluScalarApprox::domain_hi() const { return range_; }

double ReluScalarApprox::exact(double x) const {
  return target_ == ApproxTarget::log ? std::log(x) : x * x;
}

double ReluScalarApprox::knot(std::int64_t t) const {
  if (target_ == ApproxTarget::log) {
    return std::exp(-log_range_ + static_cast<double>(t) * step_);
  }
  return static_cast<double>(t) * step_;
}

double ReluScalarApprox::knot_value(std::int64_t t) const {
  if (target_ == ApproxTarget::log) return -log_range_ + static_cast<double>(t) * step_;
  const double x = knot(t);
  return x * x;
}

double ReluScalarApprox::slope(std::int64_t t) const {
  if (target_ == ApproxTarget::log) return step_ / (knot(t + 1) - knot(t));
  return knot(t) + knot(t + 1);
}

std::int64_t ReluScalarApprox::half_knots() const { return (segments_ + 1) / 2; }

ReluPiece ReluScalarApprox::piece(std::int64_t j) const {
  if (j < 0 || j >= size()) fail(ErrorCode::invalid_argument, "piece index out of range");
  if (target_ == ApproxTarget::square) {
    // Pairs relu(x - t h) and relu(-x - t h) for t = 0..m-1; an even segment
    // count leaves one slot, filled with a zero piece at j = 0.
    const std::int64_t q = j - (segments_ % 2 == 0 ? 1 : 0);
    if (q < 0) return {0.0, 0.0, 0.0};
    const std::int64_t t = q / 2;
    const double a = t == 0 ? step_ : 2.0 * step_;
    return {a, q % 2 == 0 ? 1.0 : -1.0, -knot(t)};
  }
  if (j == 0) {
    // Constant log(x_0) through a bias-only unit.
    return {-log_range_, 0.0, 1.0};
  }
  const std::int64_t t = j - 1;
  const double a = t == 0 ? slope(0) : slope(t) - slope(t - 1);
  return {a, 1.0, -knot(t)};
}

std::vector<ReluPiece> ReluScalarApprox::pieces() const {
  std::vector<ReluPiece> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (std::int64_t j = 0; j < size(); ++j) out.push_back(piece(j));
  return out;
}

double ReluScalarApprox::evaluate(double x) const {
  if (target_ == ApproxTarget::square) {
    const double u = std::abs(x);
    std::int64_t t = static_cast<std::int64_t>(std::floor(u / step_));
    t = std::clamp<std::int64_t>(t, 0, half_knots() - 1);
    return knot_value(t) + slope(t) * (u - knot(t));
  }
  const double x0 = knot(0);
  if (!(x > x0)) return knot_value(0);
  std::int64_t t = static_cast<std::int64_t>(std::floor((std::log(x) + log_range_) / step_));
  t = std::clamp<std::int64_t>(t, 0, segments_ - 1);
  return knot_value(t) + slope(t) * (x - knot(t));
}

double ReluScalarApprox::evaluate_sum(double x) const {
  double acc = 0.0;
  for (std::int64_t j = 0; j < size(); ++j) {
    const ReluPiece p = piece(j);
    acc += p.a * std::max(0.0, p.w * x + p.b);
  }
  return acc;
}

PieceBounds ReluScalarApprox::bounds() const {
  PieceBounds out;
  for (std::int64_t j = 0; j < size(); ++j) {
    const ReluPiece p = piece(j);
    out.max_abs_a = std::max(out.max_abs_a, std::abs(p.a));
    out.max_abs_w = std::max(out.max_abs_w, std::abs(p.w));
    out.max_abs_b = std::max(out.max_abs_b, std::abs(p.b));
  }
  return out;
}

ReluScalarApprox build_relu_approx(ApproxTarget target, double range, double delta,
                                   PieceBudget budget) {
  return ReluScalarApprox(target, range, delta, budget);
}

// ------------------------------------------------------------ mlp builder --

namespace {

using Taps = std::vector<std::pair<int, double>>;

// Accumulates hidden units as sparse input/output taps and emits the dense
// (W1, W2) pair.
class MlpBuilder {
 public:
  explicit MlpBuilder(int embed_dim) : embed_dim_(embed_dim) {}

  void add_unit(Taps in, Taps out) {
    in_.push_back(std::move(in));
    out_.push_back(std::move(out));
  }

  // Zeroes a slot exactly: x - relu(x) + relu(-x) = 0.
  void clean(int row) {
    add_unit({{row, 1.0}}, {{row, -1.0}});
    add_unit({{row, -1.0}}, {{row, 1.0}});
  }

  void clean_range(int first, int count) {
    for (int r = first; r < first + count; ++r) clean(r);
  }

  // out_row += f(x_{in_row}) with the bias supplied by the constant slot.
  void add_approx(const std::vector<ReluPiece>& pieces, int in_row, int out_row,
                  int one_row) {
    for (const auto& p : pieces) {
      Taps in;
      if (p.w != 0.0) in.emplace_back(in_row, p.w);
      if (p.b != 0.0) in.emplace_back(one_row, p.b);
      add_unit(std::move(in), {{out_row, p.a}});
    }
  }

  Mlp build() const {
    const int hidden = std::max<int>(1, static_cast<int>(in_.size()));
    Mlp mlp{Matrix::Zero(hidden, embed_dim_), Matrix::Zero(embed_dim_, hidden)};
    for (std::size_t u = 0; u < in_.size(); ++u) {
      for (const auto& [row, v] : in_[u]) mlp.w1(static_cast<int>(u), row) += v;
      for (const auto& [row, v] : out_[u]) mlp.w2(row, static_cast<int>(u)) += v;
    }
    return mlp;
  }

 private:
  int embed_dim_;
  std::vector<Taps> in_;
  std::vector<Taps> out_;
};

AttnHead zero_head(int d) {
  return {Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
}

// sigma(x) = x realized with relu attention: (V, Q, K) and (-V, -Q, K).
void push_linear_pair(std::vector<AttnHead>& heads, const AttnHead& head) {
  heads.push_back(head);
  heads.push_back({-head.query, head.key, -head.value});
}

}  // namespace

// ------------------------------------------------------------------ EM-TF --

void EmTfConfig::validate() const {
  if (d0 < 1 || k0 < 1) fail(ErrorCode::invalid_argument, "EM-TF: d0, k0 must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::invalid_argument, "EM-TF: delta outside (0,1)");
  if (!(log_range > 1.0)) fail(ErrorCode::invalid_argument, "EM-TF: A must exceed 1");
  if (!(mean_bound > 1.0)) fail(ErrorCode::invalid_argument, "EM-TF: mean bound must exceed 1");
  if (layers < 0) fail(ErrorCode::invalid_argument, "EM-TF: negative layer count");
}

Matrix truncate_to_multiple(const Matrix& data, int k) {
  if (k < 1) fail(ErrorCode::invalid_argument, "k < 1");
  const int keep = static_cast<int>(data.rows()) / k * k;
  if (keep < k) {
    fail(ErrorCode::invalid_argument, "need at least K samples to encode a task");
  }
  return data.topRows(keep);
}

TokenMatrix encode_em_input(const Matrix& data, const GmmParams& init,
                            const EmTfConfig& cfg) {
  cfg.validate();
  const int k = init.k();
  const int d = static_cast<int>(data.cols());
  if (k > cfg.k0 || d > cfg.d0) {
    fail(ErrorCode::capacity_error, "task (d=" + std::to_string(d) + ", K=" +
                                        std::to_string(k) + ") exceeds capacity (d0=" +
                                        std::to_string(cfg.d0) + ", K0=" +
                                        std::to_string(cfg.k0) + ")");
  }
  if (init.dim() != d) fail(ErrorCode::invalid_argument, "init dimension != data dimension");
  const Matrix x = truncate_to_multiple(data, k);
  const int n = static_cast<int>(x.rows());
  const EmTfLayout lay(cfg.d0, cfg.k0);
  Matrix h = Matrix::Zero(lay.embed_dim(), n);
  for (int i = 0; i < n; ++i) {
    const int c = i % k;
    h.block(lay.x(), i, d, 1) = x.row(i).transpose();
    for (int j = 0; j < k; ++j) {
      h(lay.pi_log() + j, i) = std::log(init.weights(j));
      h(lay.pi() + j, i) = init.weights(j);
    }
    h.block(lay.mu(), i, d, 1) = init.means.row(c).transpose();
    h(lay.c(), i) = init.means.row(c).squaredNorm();
    h(lay.one(), i) = 1.0;
    h(lay.indicator() + c, i) = 1.0;
  }
  return TokenMatrix(std::move(h));
}

TfWeights build_em_tf_weights(const EmTfConfig& cfg) {
  cfg.validate();
  const EmTfLayout lay(cfg.d0, cfg.k0);
  const int dim = lay.embed_dim();
  const auto log_pieces =
      build_relu_approx(ApproxTarget::log, cfg.log_range, cfg.delta, cfg.budget).pieces();
  const auto square_pieces =
      build_relu_approx(ApproxTarget::square, cfg.mean_bound, cfg.delta, cfg.budget).pieces();

  // E-step. Query [x; pi_log; 1], key [mu; e; -c/2], so the logit against
  // token j is x.mu_{j%K} + log pi_{j%K} - |mu_{j%K}|^2 / 2. Each component's
  // key appears N/K times, which the value sum over duplicates undoes.
  Layer e_layer;
  e_layer.activation = Activation::softmax;
  {
    AttnHead head = zero_head(dim);
    for (int r = 0; r < cfg.d0; ++r) {
      head.query(r, lay.x() + r) = 1.0;
      head.key(r, lay.mu() + r) = 1.0;
    }
    for (int c = 0; c < cfg.k0; ++c) {
      head.query(cfg.d0 + c, lay.pi_log() + c) = 1.0;
      head.key(cfg.d0 + c, lay.indicator() + c) = 1.0;
      head.value(lay.w() + c, lay.indicator() + c) = 1.0;
    }
    head.query(cfg.d0 + cfg.k0, lay.one()) = 1.0;
    head.key(cfg.d0 + cfg.k0, lay.c()) = -0.5;
    e_layer.heads.push_back(std::move(head));

    MlpBuilder mlp(dim);
    for (int c = 0; c < cfg.k0; ++c) {
      mlp.add_approx(log_pieces, lay.w() + c, lay.w_log() + c, lay.one());
    }
    mlp.clean_range(lay.pi_log(), cfg.k0);
    mlp.clean_range(lay.mu(), cfg.d0);
    mlp.clean(lay.c());
    mlp.clean_range(lay.pi(), cfg.k0);
    e_layer.mlp = mlp.build();
  }

  // M-step. Head 1: query e_{j%K}, key w_log -> softmax over tokens gives
  // w_ik / sum_i w_ik, value x writes the weighted mean into the mu slot.
  // Head 2: zero logits -> uniform 1/N, value w writes mean responsibilities
  // into the pi slot.
  Layer m_layer;
  m_layer.activation = Activation::softmax;
  {
    AttnHead means = zero_head(dim);
    for (int c = 0; c < cfg.k0; ++c) {
      means.query(c, lay.indicator() + c) = 1.0;
      means.key(c, lay.w_log() + c) = 1.0;
    }
    for (int r = 0; r < cfg.d0; ++r) means.value(lay.mu() + r, lay.x() + r) = 1.0;
    AttnHead mixing = zero_head(dim);
    for (int c = 0; c < cfg.k0; ++c) mixing.value(lay.pi() + c, lay.w() + c) = 1.0;
    m_layer.heads.push_back(std::move(means));
    m_layer.heads.push_back(std::move(mixing));

    MlpBuilder mlp(dim);
    for (int c = 0; c < cfg.k0; ++c) {
      mlp.add_approx(log_pieces, lay.pi() + c, lay.pi_log() + c, lay.one());
    }
    for (int r = 0; r < cfg.d0; ++r) {
      mlp.add_approx(square_pieces, lay.mu() + r, lay.c(), lay.one());
    }
    mlp.clean_range(lay.w(), cfg.k0);
    mlp.clean_range(lay.w_log(), cfg.k0);
    m_layer.mlp = mlp.build();
  }

  TfWeights weights;
  weights.embed_dim = dim;
  for (int l = 0; l < cfg.layers; ++l) {
    weights.layers.push_back(e_layer);
    weights.layers.push_back(m_layer);
  }
  return weights;
}

Readout em_readout(const EmTfConfig& cfg, int d, int k) {
  if (k > cfg.k0 || d > cfg.d0) fail(ErrorCode::capacity_error, "readout exceeds capacity");
  const EmTfLayout lay(cfg.d0, cfg.k0);
  const int rows = k + d;
  Readout r;
  r.pooling = Pooling::linear_mean;
  r.value = Matrix::Zero(rows, lay.embed_dim());
  r.key = Matrix::Zero(rows, lay.embed_dim());
  r.query = Matrix::Zero(rows, k);
  for (int c = 0; c < k; ++c) {
    r.value(c, lay.pi() + c) = 1.0;
    r.key(c, lay.indicator() + c) = 1.0;
    r.query(c, c) = static_cast<double>(k);
  }
  for (int j = 0; j < d; ++j) r.value(k + j, lay.mu() + j) = 1.0;
  return r;
}

GmmParams read_em_slots(const TokenMatrix& h, const EmTfConfig& cfg, int d, int k) {
  const EmTfLayout lay(cfg.d0, cfg.k0);
  if (h.embed_dim() != lay.embed_dim() || h.tokens() < k) {
    fail(ErrorCode::invalid_argument, "token matrix does not match the EM-TF layout");
  }
  GmmParams out;
  out.weights = h.values().block(lay.pi(), 0, k, 1);
  out.means.resize(k, d);
  for (int c = 0; c < k; ++c) {
    out.means.row(c) = h.values().block(lay.mu(), c, d, 1).transpose();
  }
  return out;
}

TfEmResult run_tf_em(const Matrix& data, int k, const GmmParams& init,
                     const EmTfConfig& cfg, const TfWeights& weights) {
  if (init.k() != k) fail(ErrorCode::invalid_argument, "init K != k");
  const int d = static_cast<int>(data.cols());
  const TokenMatrix h0 = encode_em_input(data, init, cfg);
  if (weights.embed_dim != h0.embed_dim()) {
    fail(ErrorCode::invalid_argument, "weights were built for a different capacity");
  }
  TfEmResult result;
  result.snapshots.push_back(read_em_slots(h0, cfg, d, k));
  const TokenMatrix out = tf_forward(h0, weights, [&](int layer, const TokenMatrix& h) {
    if (layer % 2 == 1) result.snapshots.push_back(read_em_slots(h, cfg, d, k));
  });
  result.params = attentive_pool_readout(out, em_readout(cfg, d, k), k, d);
  return result;
}

TfEmResult run_tf_em(const Matrix& data, int k, const GmmParams& init,
                     const EmTfConfig& cfg) {
  return run_tf_em(data, k, init, cfg, build_em_tf_weights(cfg));
}

// ------------------------------------------------------------- tensor-TF --

TokenMatrix encode_tensor_input(const SymTensor3& t, const Vector& v0, int d0) {
  const int d = t.dim();
  if (d0 < 1) fail(ErrorCode::invalid_argument, "d0 < 1");
  if (d > d0) {
    fail(ErrorCode::capacity_error, "tensor dimension " + std::to_string(d) +
                                        " exceeds d0 = " + std::to_string(d0));
  }
  if (v0.size() != d) fail(ErrorCode::invalid_argument, "v0 dimension != tensor dimension");
  if (!v0.allFinite()) fail(ErrorCode::invalid_argument, "v0 not finite");
  const TensorTfLayout lay(d0);
  Matrix h = Matrix::Zero(lay.embed_dim(), d);
  for (int i = 0; i < d; ++i) {
    for (int m = 0; m < d; ++m)
      for (int r = 0; r < d; ++r) h(lay.slices() + m * d0 + r, i) = t(r, i, m);
    h.block(lay.v(), i, d, 1) = v0;
    h(lay.indicator() + i, i) = 1.0;
    h(lay.one(), i) = 1.0;
    h(lay.dim_slot(), i) = static_cast<double>(d);
  }
  return TokenMatrix(std::move(h));
}

SymTensor3 decode_tensor_slices(const TokenMatrix& h, int d0) {
  const int d = h.tokens();
  const TensorTfLayout lay(d0);
  if (h.embed_dim() != lay.embed_dim() || d > d0) {
    fail(ErrorCode::invalid_argument, "token matrix does not match the tensor layout");
  }
  SymTensor3 t(d);
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m)
      for (int r = 0; r < d; ++r) t(r, i, m) = h.values()(lay.slices() + m * d0 + r, i);
  return t;
}

TfWeights build_tensor_power_tf(int d0, int layers) {
  if (d0 < 1) fail(ErrorCode::invalid_argument, "d0 < 1");
  if (layers < 0) fail(ErrorCode::invalid_argument, "negative layer count");
  const TensorTfLayout lay(d0);
  const int dim = lay.embed_dim();

  // Layer A: token i receives (1/d) sum_j v_i * d = d v_i in its scaled slot;
  // the MLP then moves v into v_prev.
  Layer scale_layer;
  scale_layer.activation = Activation::relu_scaled;
  {
    AttnHead head = zero_head(dim);
    for (int r = 0; r < d0; ++r) {
      head.query(r, lay.indicator() + r) = 1.0;
      head.key(r, lay.v() + r) = 1.0;
    }
    head.value(lay.scaled_v(), lay.dim_slot()) = 1.0;
    push_linear_pair(scale_layer.heads, head);

    MlpBuilder mlp(dim);
    for (int r = 0; r < d0; ++r) {
      mlp.add_unit({{lay.v() + r, 1.0}}, {{lay.v() + r, -1.0}, {lay.v_prev() + r, 1.0}});
      mlp.add_unit({{lay.v() + r, -1.0}}, {{lay.v() + r, 1.0}, {lay.v_prev() + r, -1.0}});
    }
    scale_layer.mlp = mlp.build();
  }

  // Layer B: head m adds (1/d) sum_j (v_m * d v_j) T(:, j, m).
  Layer power_layer;
  power_layer.activation = Activation::relu_scaled;
  {
    for (int m = 0; m < d0; ++m) {
      AttnHead head = zero_head(dim);
      head.query(0, lay.v_prev() + m) = 1.0;
      head.key(0, lay.scaled_v()) = 1.0;
      for (int r = 0; r < d0; ++r) head.value(lay.v() + r, lay.slices() + m * d0 + r) = 1.0;
      push_linear_pair(power_layer.heads, head);
    }
    MlpBuilder mlp(dim);
    mlp.clean(lay.scaled_v());
    mlp.clean_range(lay.v_prev(), d0);
    power_layer.mlp = mlp.build();
  }

  TfWeights weights;
  weights.embed_dim = dim;
  for (int l = 0; l < layers; ++l) {
    weights.layers.push_back(scale_layer);
    weights.layers.push_back(power_layer);
  }
  return weights;
}

std::vector<Vector> run_tf_tensor_power(const SymTensor3& t, const Vector& v0,
                                        const TfWeights& weights, int d0,
                                        bool normalize) {
  const TensorTfLayout lay(d0);
  TokenMatrix h = encode_tensor_input(t, v0, d0);
  if (weights.embed_dim != lay.embed_dim()) {
    fail(ErrorCode::invalid_argument, "weights were built for a different d0");
  }
  const int d = t.dim();
  const int iterations = static_cast<int>(weights.layers.size()) / 2;
  std::vector<Vector> iterates;
  iterates.reserve(iterations);
  for (int it = 0; it < iterations; ++it) {
    h = tf_forward_range(h, weights, 2 * it, 2 * it + 2);
    const double peak = h.values().cwiseAbs().maxCoeff();
    if (!(peak <= kTensorOverflowBound)) {
      fail(ErrorCode::overflow_error, "tensor power iterate exceeded 1e100 at iteration " +
                                          std::to_string(it + 1));
    }
    Vector v = h.values().block(lay.v(), 0, d, 1);
    if (normalize) {
      const double norm = v.norm();
      if (norm > 0.0) {
        v /= norm;
        for (int i = 0; i < h.tokens(); ++i) h.values().block(lay.v(), i, d, 1) = v;
      }
    }
    iterates.push_back(std::move(v));
  }
  return iterates;
}

std::vector<Vector> run_tf_tensor_power(const SymTensor3& t, const Vector& v0,
                                        int d0, int layers, bool normalize) {
  return run_tf_tensor_power(t, v0, build_tensor_power_tf(d0, layers), d0, normalize);
}

}  // namespace gmmtf

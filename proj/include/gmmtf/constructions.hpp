#pragma once

#include <cstdint>
#include <vector>

#include "gmmtf/core.hpp"
#include "gmmtf/transformer.hpp"

namespace gmmtf {

// ---------------------------------------------------------------------------
// Scalar ReLU approximators: f(x) ~ sum_j a_j relu(w_j x + b_j).
//
// Both targets are piecewise-linear interpolants with n segments.
// `log`: knots x_0 < ... < x_n uniform in log x on [1/A, A]. Piece 0 is the
// constant log(x_0) realized as a * relu(0 * x + b); piece 1 is the first
// slope s_0 relu(x - x_0); piece t + 1 adds the slope change s_t - s_{t-1}
// at x_t.
// `square`: knots t h, h = 2A / n, mirrored about 0. The interpolant is even,
// sum_t c_t (relu(x - t h) + relu(-x - t h)) over t < ceil(n / 2), which is
// exactly zero at x = 0; an even n adds one zero piece.
// Hence M = n + 1 pieces.
//
// `standard` budget: n = ceil(2 log A / delta) (log), n = ceil(2 A^2 / delta)
// (square). `tight` budget uses the chord-error bound instead:
// n = ceil(2 log A / sqrt(8 delta)) (log), n = ceil(A / sqrt(delta)) (square).
// Both meet the uniform tolerance delta and the weight bounds
// |a_j| <= 2A, |w_j| <= 1, |b_j| <= A.
// ---------------------------------------------------------------------------

enum class ApproxTarget { log, square };
enum class PieceBudget { standard, tight };

struct ReluPiece {
  double a = 0.0;
  double w = 0.0;
  double b = 0.0;
};

struct PieceBounds {
  double max_abs_a = 0.0;
  double max_abs_w = 0.0;
  double max_abs_b = 0.0;
};

class ReluScalarApprox {
 public:
  ReluScalarApprox(ApproxTarget target, double range, double tolerance,
                   PieceBudget budget);

  ApproxTarget target() const { return target_; }
  double range() const { return range_; }
  double tolerance() const { return tolerance_; }
  PieceBudget budget() const { return budget_; }

  // M. Pieces are generated on demand so that large standard budgets (about
  // 2e7 pieces for square at A = 100, delta = 1e-3) stay cheap.
  std::int64_t size() const { return segments_ + 1; }
  ReluPiece piece(std::int64_t j) const;
  std::vector<ReluPiece> pieces() const;

  // Domain on which the tolerance holds: [1/A, A] or [-A, A].
  double domain_lo() const;
  double domain_hi() const;

  // Value of the interpolant (equal to the piece sum up to rounding), O(1).
  double evaluate(double x) const;
  // Literal sum over all M pieces.
  double evaluate_sum(double x) const;

  PieceBounds bounds() const;

  double exact(double x) const;

 private:
  double knot(std::int64_t t) const;
  double knot_value(std::int64_t t) const;
  double slope(std::int64_t t) const;
  // Nonnegative square knots t h used by the even representation.
  std::int64_t half_knots() const;

  ApproxTarget target_;
  double range_;
  double tolerance_;
  PieceBudget budget_;
  std::int64_t segments_ = 1;
  double log_range_ = 0.0;  // log A
  double step_ = 0.0;       // knot spacing in log x (log) or x (square)
};

ReluScalarApprox build_relu_approx(ApproxTarget target, double range, double delta,
                                   PieceBudget budget = PieceBudget::standard);

std::int64_t standard_piece_count(ApproxTarget target, double range, double delta);

// ---------------------------------------------------------------------------
// EM as a softmax transformer.
// ---------------------------------------------------------------------------

struct EmTfConfig {
  int d0 = 2;
  int k0 = 2;
  double log_range = 1e8;   // A for log_delta on [1/A, A]
  double delta = 1e-4;      // approximator tolerance
  int layers = 10;          // EM iterations unrolled (2 transformer layers each)
  double mean_bound = 16.0; // square approximator domain [-B, B]
  PieceBudget budget = PieceBudget::tight;

  void validate() const;
};

// Row offsets of the token layout. Slots, top to bottom:
//   x (d0) | pi_log (k0) | mu (d0) | c (1) | w (k0) | w_log (k0) | pi (k0) |
//   1 | e (k0)
struct EmTfLayout {
  int d0 = 0;
  int k0 = 0;
  explicit EmTfLayout(int d0_, int k0_) : d0(d0_), k0(k0_) {}
  int x() const { return 0; }
  int pi_log() const { return d0; }
  int mu() const { return d0 + k0; }
  int c() const { return 2 * d0 + k0; }
  int w() const { return 2 * d0 + k0 + 1; }
  int w_log() const { return 2 * d0 + 2 * k0 + 1; }
  int pi() const { return 2 * d0 + 3 * k0 + 1; }
  int one() const { return 2 * d0 + 4 * k0 + 1; }
  int indicator() const { return 2 * d0 + 4 * k0 + 2; }
  int embed_dim() const { return 2 * d0 + 5 * k0 + 2; }
};

// First K * floor(N / K) rows.
Matrix truncate_to_multiple(const Matrix& data, int k);

TokenMatrix encode_em_input(const Matrix& data, const GmmParams& init,
                            const EmTfConfig& cfg);

// 2L layers: odd layers the E-step, even layers the M-step.
TfWeights build_em_tf_weights(const EmTfConfig& cfg);

// Linear attentive pooling for a (d, K) task.
Readout em_readout(const EmTfConfig& cfg, int d, int k);

// Parameters held in the token slots (pi slot of token 0, mu slot of tokens
// 0..K-1) after an M-step layer.
GmmParams read_em_slots(const TokenMatrix& h, const EmTfConfig& cfg, int d, int k);

struct TfEmResult {
  GmmParams params;                  // from the readout
  std::vector<GmmParams> snapshots;  // [0] = init, [l] after l iterations
};

TfEmResult run_tf_em(const Matrix& data, int k, const GmmParams& init,
                     const EmTfConfig& cfg);
// Reuses prebuilt weights (their layer count overrides cfg.layers).
TfEmResult run_tf_em(const Matrix& data, int k, const GmmParams& init,
                     const EmTfConfig& cfg, const TfWeights& weights);

// ---------------------------------------------------------------------------
// Cubic tensor power iteration as a ReLU-attention transformer.
// ---------------------------------------------------------------------------

// Slots: t (d0^2, block m holds T(:, i, m)) | v (d0) | e (d0) | 1 | d |
//   d*v_i | v_prev (d0)
//
// Layer A: one relu head pair writes d*v_i into token i; its MLP moves v into
// v_prev exactly (relu(x) - relu(-x) = x), leaving the v slot at zero.
// Layer B: d0 relu head pairs, head m adding (1/d) sum_j v_m (d v_j) T(:, j, m)
// to the v slot; its MLP clears d*v_i and v_prev. Writing into an emptied
// slot keeps the floating-point result free of the cancellation in
// v + (T(I,v,v) - v), which loses all relative precision once the iterates
// shrink.
struct TensorTfLayout {
  int d0 = 0;
  explicit TensorTfLayout(int d0_) : d0(d0_) {}
  int slices() const { return 0; }
  int v() const { return d0 * d0; }
  int indicator() const { return d0 * d0 + d0; }
  int one() const { return d0 * d0 + 2 * d0; }
  int dim_slot() const { return d0 * d0 + 2 * d0 + 1; }
  int scaled_v() const { return d0 * d0 + 2 * d0 + 2; }
  int v_prev() const { return d0 * d0 + 2 * d0 + 3; }
  int embed_dim() const { return d0 * d0 + 3 * d0 + 3; }
};

inline constexpr double kTensorOverflowBound = 1e100;

TokenMatrix encode_tensor_input(const SymTensor3& t, const Vector& v0, int d0);
// Inverse of the t-slot encoding.
SymTensor3 decode_tensor_slices(const TokenMatrix& h, int d0);

TfWeights build_tensor_power_tf(int d0, int layers);

// Unnormalized iterates v^(1..L). With `normalize`, the v slot is rescaled to
// unit norm between iterations outside the network.
std::vector<Vector> run_tf_tensor_power(const SymTensor3& t, const Vector& v0,
                                        int d0, int layers, bool normalize = false);
std::vector<Vector> run_tf_tensor_power(const SymTensor3& t, const Vector& v0,
                                        const TfWeights& weights, int d0,
                                        bool normalize = false);

}  // namespace gmmtf

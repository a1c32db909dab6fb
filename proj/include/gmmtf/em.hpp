#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmmtf/core.hpp"
#include "gmmtf/rng.hpp"

namespace gmmtf {

// N x K posterior matrix; rows sum to one.
using Responsibilities = Matrix;

enum class InitStrategy { kmeanspp, random, oracle };

const char* to_string(InitStrategy s);
InitStrategy parse_init_strategy(const std::string& name);

enum class Termination { converged, max_iters };

struct EmOptions {
  int max_iters = 100;
  double tol = 1e-6;
  bool anisotropic = false;
  int max_restarts = 3;
  std::uint64_t seed = 0;
};

struct EmTrace {
  // iterates[0] is the initialization; iterates[j] follows j EM updates.
  std::vector<GmmParams> iterates;
  // Average log-likelihood of each iterate.
  std::vector<double> log_likelihood;
  Termination termination = Termination::max_iters;
  int restarts = 0;

  int iterations() const { return static_cast<int>(iterates.size()) - 1; }
};

struct EmResult {
  GmmParams params;
  EmTrace trace;
};

inline constexpr double kScaleFloor = 1e-6;
inline constexpr double kMinComponentMass = 1e-12;

Responsibilities e_step(const Matrix& data, const GmmParams& params);

// Anisotropic mode also re-estimates per-dimension scales (floored).
GmmParams m_step(const Matrix& data, const Responsibilities& resp,
                 bool anisotropic = false);

// Max over components of the mean shift and the relative weight change.
double parameter_change(const GmmParams& from, const GmmParams& to);

EmResult run_em(const Matrix& data, int k, const GmmParams& init,
                const EmOptions& options = {});

// `truth` is required for InitStrategy::oracle.
EmResult run_em(const Matrix& data, int k, InitStrategy strategy,
                const EmOptions& options = {},
                const GmmParams* truth = nullptr);

// k-means++ seeding followed by one hard-assignment M-step.
GmmParams kmeanspp_init(const Matrix& data, int k, Rng& rng,
                        bool anisotropic = false);
// K distinct data points as means, uniform weights.
GmmParams random_init(const Matrix& data, int k, Rng& rng,
                      bool anisotropic = false);
// Truth with each mean moved uniformly inside a ball of radius R_min/16 and
// each weight perturbed by at most 15% before renormalization, which keeps
// |pi0 - pi| <= pi/2.
GmmParams oracle_init(const GmmParams& truth, Rng& rng);

GmmParams initialize(const Matrix& data, int k, InitStrategy strategy,
                     Rng& rng, const GmmParams* truth, bool anisotropic);

// Minimum pairwise distance between means (infinity when K = 1).
double min_separation(const Matrix& means);

}  // namespace gmmtf

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gmmtf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  invalid_argument,
  sampling_exhausted,
  degenerate_component,
  rank_error,
  decomposition_failure,
  capacity_error,
  overflow_error,
  io_error,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code distinguishes failure modes
// that callers (the bench harness, the C API) report rather than abort on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<int> component = std::nullopt)
      : std::runtime_error(what), code_(code), component_(component) {}

  ErrorCode code() const noexcept { return code_; }
  // Set for degenerate_component.
  std::optional<int> component() const noexcept { return component_; }

 private:
  ErrorCode code_;
  std::optional<int> component_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace gmmtf

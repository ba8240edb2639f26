#ifndef DWT_ERRORS_HPP
#define DWT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dwt {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by the Cholesky factorization when a pivot is not strictly positive.
// The pivot index tells which leading minor failed (epsilon too small, or a
// degenerate batch).
struct NotPositiveDefiniteError : std::runtime_error {
  std::size_t pivot;
  explicit NotPositiveDefiniteError(std::size_t pivot_index)
      : std::runtime_error("matrix not positive definite at pivot " +
                           std::to_string(pivot_index)),
        pivot(pivot_index) {}
};

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateBatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UninitializedStatsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Layer/state-machine misuse: backward without forward, mismatched EMA
// structures, and similar.
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// finite_diff_grad hit a non-finite function value.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed external input (IDX files, checkpoints, metrics files).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted on a non-finite loss; carries the diagnostics dump path.
struct NonFiniteLossError : std::runtime_error {
  std::string dump_path;
  NonFiniteLossError(const std::string& msg, std::string path)
      : std::runtime_error(msg), dump_path(std::move(path)) {}
};

}  // namespace dwt

#endif  // DWT_ERRORS_HPP

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace foxh {

enum class ErrorKind {
  NonPositiveWeight,
  ShiftViolation,
  AStarViolation,
  PoleCollision,
  NoConvergence,
  Overflow,
  ContourTooClose,
  QuadratureNonConvergent,
  DegenerateClass,
  UnsupportedClass,
  MomentMismatch,
  EmbeddingNotPSD,
  GridTooLarge,
  InvalidArgument,
  SingularCovariance,
  InsufficientLags,
  EmptyInterval,
  ParameterConditionFailed,
  SchemaError,
};

std::string_view to_string(ErrorKind kind);

// Every library failure carries a machine-readable kind; the CLI maps kinds to
// exit codes and JSON error objects.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace foxh

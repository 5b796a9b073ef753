#include "foxh/errors.hpp"

namespace foxh {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::ShiftViolation: return "ShiftViolation";
    case ErrorKind::AStarViolation: return "AStarViolation";
    case ErrorKind::PoleCollision: return "PoleCollision";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::ContourTooClose: return "ContourTooClose";
    case ErrorKind::QuadratureNonConvergent: return "QuadratureNonConvergent";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::UnsupportedClass: return "UnsupportedClass";
    case ErrorKind::MomentMismatch: return "MomentMismatch";
    case ErrorKind::EmbeddingNotPSD: return "EmbeddingNotPSD";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::InsufficientLags: return "InsufficientLags";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::ParameterConditionFailed: return "ParameterConditionFailed";
    case ErrorKind::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace foxh

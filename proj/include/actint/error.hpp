#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actint {

enum class ErrorKind {
  InvalidInterval,
  TooFewKnots,
  NonFiniteSample,
  InvalidInput,
  InvalidPartition,
  KindMismatch,
  UnsupportedTarget,
  StageDomain,
  InvalidGrid,
  IncompleteGrid,
  LinearizerCollision,
  Shape,
  NumericOverflow,
  Transform,
  UnsupportedSplit,
  SingularCover,
  InvalidCover,
  DegenerateUnit,
  TrainingDiverged,
  InvalidConfig,
  Parse,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInterval: return "invalid-interval";
    case ErrorKind::TooFewKnots: return "too-few-knots";
    case ErrorKind::NonFiniteSample: return "non-finite-sample";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidPartition: return "invalid-partition";
    case ErrorKind::KindMismatch: return "kind-mismatch";
    case ErrorKind::UnsupportedTarget: return "unsupported-target";
    case ErrorKind::StageDomain: return "stage-domain-error";
    case ErrorKind::InvalidGrid: return "invalid-grid";
    case ErrorKind::IncompleteGrid: return "incomplete-grid";
    case ErrorKind::LinearizerCollision: return "linearizer-collision";
    case ErrorKind::Shape: return "shape-error";
    case ErrorKind::NumericOverflow: return "numeric-overflow";
    case ErrorKind::Transform: return "transform-error";
    case ErrorKind::UnsupportedSplit: return "unsupported-split";
    case ErrorKind::SingularCover: return "singular-cover";
    case ErrorKind::InvalidCover: return "invalid-cover";
    case ErrorKind::DegenerateUnit: return "degenerate-unit";
    case ErrorKind::TrainingDiverged: return "training-diverged";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::Parse: return "parse-error";
  }
  return "unknown";
}

/// Every domain failure in the library is reported as an Error carrying a
/// machine-readable kind; what() reads "<kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace actint

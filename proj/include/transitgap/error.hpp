#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace transitgap {

enum class ErrorCode {
  SchemaError,
  MissingParent,
  NegativeCount,
  PopulationMismatch,
  OutOfRangeCoordinate,
  DuplicateMonth,
  InconsistentEnrollment,
  ConstantFeature,
  UnknownFeature,
  TooFewRows,
  SingularDesign,
  ExpansionTooLarge,
  DivergedLoss,
  DimensionMismatch,
  ZeroMeanActual,
  KindUnsupported,
  EmptyDataset,
  DegeneratePredictor,
  SpecMismatch,
  NegativeOverride,
  MissingArtifact,
  ConfigError,
  IoError,
  MalformedRequest,
  NotFound,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures surface as this exception; the code is what
// callers (CLI exit status, HTTP error body) branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal conditions recorded alongside a result.
struct Warning {
  std::string code;
  std::string subject;
  std::string message;

  bool operator==(const Warning&) const = default;
};

using Warnings = std::vector<Warning>;

}  // namespace transitgap

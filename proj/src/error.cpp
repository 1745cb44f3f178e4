#include "transitgap/error.hpp"

namespace transitgap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingParent: return "MissingParent";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::PopulationMismatch: return "PopulationMismatch";
    case ErrorCode::OutOfRangeCoordinate: return "OutOfRangeCoordinate";
    case ErrorCode::DuplicateMonth: return "DuplicateMonth";
    case ErrorCode::InconsistentEnrollment: return "InconsistentEnrollment";
    case ErrorCode::ConstantFeature: return "ConstantFeature";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::ExpansionTooLarge: return "ExpansionTooLarge";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroMeanActual: return "ZeroMeanActual";
    case ErrorCode::KindUnsupported: return "KindUnsupported";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegeneratePredictor: return "DegeneratePredictor";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::NegativeOverride: return "NegativeOverride";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedRequest: return "MalformedRequest";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace transitgap

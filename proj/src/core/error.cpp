#include "error.hpp"

namespace aosr {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Format: return "FormatError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NegativeDepth: return "NegativeDepth";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::MissingDepth: return "MissingDepth";
    case ErrorCode::IndivisibleSpatialDims: return "IndivisibleSpatialDims";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateAnchor: return "DegenerateAnchor";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::PairMismatch: return "PairMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace aosr

#include "repovul/error.hpp"

namespace repovul {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDiff: return "MalformedDiff";
    case ErrorCode::EmptyDiff: return "EmptyDiff";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::InvalidMetadata: return "InvalidMetadata";
    case ErrorCode::UnknownSample: return "UnknownSample";
    case ErrorCode::EmptyCollection: return "EmptyCollection";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::AdapterTimeout: return "AdapterTimeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::AdapterCrashed: return "AdapterCrashed";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SampleSetMismatch: return "SampleSetMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ArtifactMismatch: return "ArtifactMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace repovul

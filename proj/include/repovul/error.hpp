#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repovul {

enum class ErrorCode {
  MalformedDiff,
  EmptyDiff,
  MissingFile,
  InvalidMetadata,
  UnknownSample,
  EmptyCollection,
  DimensionMismatch,
  ProviderUnavailable,
  InvalidArgument,
  InvalidRule,
  AdapterTimeout,
  ProtocolError,
  AdapterCrashed,
  KeyMismatch,
  TooFewSamples,
  SampleSetMismatch,
  InvalidConfig,
  ArtifactMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

  bool is_adapter_failure() const noexcept {
    return code_ == ErrorCode::AdapterTimeout || code_ == ErrorCode::ProtocolError ||
           code_ == ErrorCode::AdapterCrashed || code_ == ErrorCode::ProviderUnavailable;
  }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace repovul

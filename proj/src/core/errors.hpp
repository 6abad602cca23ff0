#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iiie {

// Every failure the pipeline can raise. The first five form the closed set a
// Failed job may report; the rest are local to a module or the tooling.
enum class ErrorCode {
  AnalysisUnparseable,
  GroundingEmpty,
  BackendUnreachable,
  BackendContractViolation,
  MalformedImage,

  OversizedImage,
  BackendRejected,
  DimensionMismatch,
  EmptyBoxAfterClamp,
  InvalidPlan,
  PreconditionViolation,
  TemplateError,
  PortUnavailable,
  ManifestMalformed,
  EvenPanel,
  IncompletePanel,
  DuplicateRating,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

// Folds a module-level code into the closed set carried by JobState.
ErrorCode job_error_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iiie

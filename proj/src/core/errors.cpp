#include "core/errors.hpp"

#include <array>
#include <utility>

namespace iiie {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 19> kNames{{
    {ErrorCode::AnalysisUnparseable, "AnalysisUnparseable"},
    {ErrorCode::GroundingEmpty, "GroundingEmpty"},
    {ErrorCode::BackendUnreachable, "BackendUnreachable"},
    {ErrorCode::BackendContractViolation, "BackendContractViolation"},
    {ErrorCode::MalformedImage, "MalformedImage"},
    {ErrorCode::OversizedImage, "OversizedImage"},
    {ErrorCode::BackendRejected, "BackendRejected"},
    {ErrorCode::DimensionMismatch, "DimensionMismatch"},
    {ErrorCode::EmptyBoxAfterClamp, "EmptyBoxAfterClamp"},
    {ErrorCode::InvalidPlan, "InvalidPlan"},
    {ErrorCode::PreconditionViolation, "PreconditionViolation"},
    {ErrorCode::TemplateError, "TemplateError"},
    {ErrorCode::PortUnavailable, "PortUnavailable"},
    {ErrorCode::ManifestMalformed, "ManifestMalformed"},
    {ErrorCode::EvenPanel, "EvenPanel"},
    {ErrorCode::IncompletePanel, "IncompletePanel"},
    {ErrorCode::DuplicateRating, "DuplicateRating"},
    {ErrorCode::ConfigError, "ConfigError"},
    {ErrorCode::IoError, "IoError"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

ErrorCode job_error_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::AnalysisUnparseable:
    case ErrorCode::GroundingEmpty:
    case ErrorCode::BackendUnreachable:
    case ErrorCode::BackendContractViolation:
    case ErrorCode::MalformedImage:
      return code;
    case ErrorCode::OversizedImage:
      return ErrorCode::MalformedImage;
    case ErrorCode::BackendRejected:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyBoxAfterClamp:
      return ErrorCode::BackendContractViolation;
    case ErrorCode::InvalidPlan:
    case ErrorCode::PreconditionViolation:
    case ErrorCode::TemplateError:
      return ErrorCode::AnalysisUnparseable;
    default:
      return ErrorCode::BackendUnreachable;
  }
}

}  // namespace iiie

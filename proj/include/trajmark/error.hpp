#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajmark {

enum class ErrorCode {
  MalformedLine,
  SchemaViolation,
  EmptyActions,
  InvalidDistribution,
  IndexOutOfRange,
  ArityMismatch,
  SupportMismatch,
  NoObservations,
  UnknownTool,
  InvalidArguments,
  ExecutionFailure,
  CapacityExhausted,
  LengthMismatch,
  InvalidRange,
  MappingGap,
  EmptyRegistry,
  CorpusMismatch,
  NoValidCandidates,
  ManifestError,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` names the
// contract violation so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trajmark

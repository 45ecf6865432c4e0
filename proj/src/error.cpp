#include "trajmark/error.hpp"

namespace trajmark {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyActions: return "EmptyActions";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::NoObservations: return "NoObservations";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::InvalidArguments: return "InvalidArguments";
    case ErrorCode::ExecutionFailure: return "ExecutionFailure";
    case ErrorCode::CapacityExhausted: return "CapacityExhausted";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::MappingGap: return "MappingGap";
    case ErrorCode::EmptyRegistry: return "EmptyRegistry";
    case ErrorCode::CorpusMismatch: return "CorpusMismatch";
    case ErrorCode::NoValidCandidates: return "NoValidCandidates";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace trajmark

#include "threatwatch/error.hpp"

#include <fmt/format.h>

namespace threatwatch {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::DuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::UnknownSample: return "UnknownSample";
    case ErrorCode::DuplicatePrediction: return "DuplicatePrediction";
    case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::BadScript: return "BadScript";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::UnknownScheme: return "UnknownScheme";
    case ErrorCode::AdapterUnavailable: return "AdapterUnavailable";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ParseError::ParseError(ErrorCode code, std::size_t line, std::string field_path,
                       std::string reason)
    : Error(code,
            fmt::format("{} at line {}{}{}: {}", to_string(code), line,
                        field_path.empty() ? "" : ", field ", field_path,
                        reason),
            field_path),
      line_(line),
      reason_(std::move(reason)) {}

OutOfOrderFrame::OutOfOrderFrame(std::string stream_id, std::uint64_t frame_id,
                                 std::uint64_t last_frame_id)
    : Error(ErrorCode::OutOfOrderFrame,
            fmt::format("OutOfOrderFrame: stream '{}' frame {} after {}",
                        stream_id, frame_id, last_frame_id),
            std::move(stream_id)),
      frame_id_(frame_id) {}

}  // namespace threatwatch

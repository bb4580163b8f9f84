#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace threatwatch {

enum class ErrorCode {
  MalformedJson,
  SchemaViolation,
  EmptyManifest,
  DuplicateSampleId,
  BadRatios,
  MissingPrediction,
  UnknownSample,
  DuplicatePrediction,
  OutOfOrderFrame,
  BadScript,
  BadConfig,
  UnknownScheme,
  AdapterUnavailable,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Base for every domain error. `code()` is the machine-readable reason,
// `subject()` carries the offending id / field path when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {})
      : std::runtime_error(std::move(message)),
        code_(code),
        subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

  // I/O failures map to exit code 2, everything else to 1.
  bool is_io() const noexcept { return code_ == ErrorCode::Io; }

 private:
  ErrorCode code_;
  std::string subject_;
};

// Line-oriented parse failure: MalformedJson or SchemaViolation.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, std::string field_path,
             std::string reason);

  std::size_t line() const noexcept { return line_; }
  const std::string& field_path() const noexcept { return subject(); }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class OutOfOrderFrame : public Error {
 public:
  OutOfOrderFrame(std::string stream_id, std::uint64_t frame_id,
                  std::uint64_t last_frame_id);

  std::uint64_t frame_id() const noexcept { return frame_id_; }

 private:
  std::uint64_t frame_id_;
};

}  // namespace threatwatch

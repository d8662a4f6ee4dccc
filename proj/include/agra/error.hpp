#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agra {

enum class ErrorCode {
  Io,
  Parse,
  LabelOutOfRange,
  RowCountMismatch,
  InvalidArgument,
  DimensionMismatch,
  EmptySplit,
  EmptyInput,
  NonFinite,
  Config,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

// All library failures are reported as agra::Error. `line()` is 1-based and
// zero when the failure is not tied to a line of an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace agra

#pragma once

#include <stdexcept>
#include <string>

namespace wchj {

enum class ErrorCode {
  SignViolation,
  RowSumViolation,
  NonFinite,
  NotSquare,
  DimensionTooLarge,
  NegativeTime,
  OutOfDomain,
  ShapeMismatch,
  SearchWindowTooSmall,
  WindowBoundaryTouched,
  StepTooLarge,
  CflViolation,
  BlowUp,
  InsufficientTimeLevels,
  InvalidArgument,
  Config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures that indicate NaN/overflow rather than bad input.
  bool is_numeric_failure() const noexcept {
    return code_ == ErrorCode::NonFinite || code_ == ErrorCode::BlowUp;
  }

 private:
  ErrorCode code_;
};

/// Rejection of a raw coupling matrix. Indices are 1-based, as in b_ij.
class CouplingError : public Error {
 public:
  CouplingError(ErrorCode code, int row, int col, const std::string& what)
      : Error(code, what), row_(row), col_(col) {}

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

}  // namespace wchj

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace morh2w {

/// Failure categories raised by the library. The CLI maps any of these to
/// exit code 2; the experiment harness records the name in its table.
enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  SingularShift,
  SpectrumOverlap,
  NotHurwitz,
  UnstableSystem,
  NonzeroFeedthrough,
  NoConvergence,
  DefectiveMatrix,
  NotPSD,
  RankDeficient,
  RankTooLow,
  PivotBreakdown,
  PerturbationUnstable,
  SingularCorrection,
  UnstableIterate,
  InvalidBand,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace morh2w

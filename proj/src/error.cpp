#include "morh2w/error.hpp"

namespace morh2w {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::SpectrumOverlap: return "SpectrumOverlap";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::UnstableSystem: return "UnstableSystem";
    case ErrorCode::NonzeroFeedthrough: return "NonzeroFeedthrough";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DefectiveMatrix: return "DefectiveMatrix";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::RankTooLow: return "RankTooLow";
    case ErrorCode::PivotBreakdown: return "PivotBreakdown";
    case ErrorCode::PerturbationUnstable: return "PerturbationUnstable";
    case ErrorCode::SingularCorrection: return "SingularCorrection";
    case ErrorCode::UnstableIterate: return "UnstableIterate";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace morh2w

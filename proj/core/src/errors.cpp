#include "rsbandit/errors.hpp"

namespace rsb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RowsNotStochastic: return "RowsNotStochastic";
    case ErrorCode::SingularTransition: return "SingularTransition";
    case ErrorCode::RankDeficientRewards: return "RankDeficientRewards";
    case ErrorCode::MeanOutOfRange: return "MeanOutOfRange";
    case ErrorCode::ZeroTransitionEntry: return "ZeroTransitionEntry";
    case ErrorCode::NoUniqueStationary: return "NoUniqueStationary";
    case ErrorCode::DegenerateLikelihood: return "DegenerateLikelihood";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::IllConditionedMoments: return "IllConditionedMoments";
    case ErrorCode::WhiteningFailure: return "WhiteningFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NonPositiveRegret: return "NonPositiveRegret";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace rsb

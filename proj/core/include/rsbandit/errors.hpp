#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsb {

/// Failure categories surfaced by the library. Each maps onto a named
/// precondition or numerical failure so callers can branch on it.
enum class ErrorCode {
  InvalidArgument,
  ParseError,
  // model validation
  RowsNotStochastic,
  SingularTransition,
  RankDeficientRewards,
  MeanOutOfRange,
  ZeroTransitionEntry,
  NoUniqueStationary,
  // belief filter
  DegenerateLikelihood,
  // spectral estimation
  InsufficientData,
  IllConditionedMoments,
  WhiteningFailure,
  NonConvergence,
  DegenerateColumn,
  // planning
  GridTooLarge,
  NotConverged,
  // experiment harness
  NonPositiveRegret,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rsb

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pibr {

// Every failure the library raises carries one of these codes. Names match the
// diagnostics printed by the CLI.
enum class Errc {
  kUnknownGame,
  kPenaltyParamNonNegative,
  kInvalidGame,
  kSpawnInfeasible,
  kActionOutOfRange,
  kStepAfterDone,
  kPolicyRuntimeFailure,
  kParseError,
  kArityError,
  kRuntimeError,
  kInvalidDistribution,
  kFuelExhausted,
  kDepthExceeded,
  kLlmUnavailable,
  kNoCodeBlock,
  kInvalidOperatorConfig,
  kNoValidCandidate,
  kAllProfilesInvalid,
  kGuardednessError,
  kNonStabilized,
  kInvalidPayoffs,
  kUnknownAgent,
  kMissingKey,
  kTypeMismatch,
  kUnknownKey,
  kInvalidConfig,
  kIoError,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pibr

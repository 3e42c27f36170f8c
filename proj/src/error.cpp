#include "pibr/error.hpp"

namespace pibr {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kUnknownGame: return "UnknownGame";
    case Errc::kPenaltyParamNonNegative: return "PenaltyParamNonNegative";
    case Errc::kInvalidGame: return "InvalidGame";
    case Errc::kSpawnInfeasible: return "SpawnInfeasible";
    case Errc::kActionOutOfRange: return "ActionOutOfRange";
    case Errc::kStepAfterDone: return "StepAfterDone";
    case Errc::kPolicyRuntimeFailure: return "PolicyRuntimeFailure";
    case Errc::kParseError: return "ParseError";
    case Errc::kArityError: return "ArityError";
    case Errc::kRuntimeError: return "RuntimeError";
    case Errc::kInvalidDistribution: return "InvalidDistribution";
    case Errc::kFuelExhausted: return "FuelExhausted";
    case Errc::kDepthExceeded: return "DepthExceeded";
    case Errc::kLlmUnavailable: return "LlmUnavailable";
    case Errc::kNoCodeBlock: return "NoCodeBlock";
    case Errc::kInvalidOperatorConfig: return "InvalidOperatorConfig";
    case Errc::kNoValidCandidate: return "NoValidCandidate";
    case Errc::kAllProfilesInvalid: return "AllProfilesInvalid";
    case Errc::kGuardednessError: return "GuardednessError";
    case Errc::kNonStabilized: return "NonStabilized";
    case Errc::kInvalidPayoffs: return "InvalidPayoffs";
    case Errc::kUnknownAgent: return "UnknownAgent";
    case Errc::kMissingKey: return "MissingKey";
    case Errc::kTypeMismatch: return "TypeMismatch";
    case Errc::kUnknownKey: return "UnknownKey";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace pibr

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bellbox {

enum class ErrorCode {
  InvalidScenario,
  NegativeEntry,
  UnnormalizedContext,
  MissingContext,
  NonBinarySetting,
  ScenarioMismatch,
  BadWeights,
  ModelInvalid,
  UnknownCause,
  AnglesMissing,
  ScenarioShape,
  NumericInputUnnormalized,
  UnsampledContext,
  UnknownBuiltin,
  InvalidPlan,
  InvariantViolation,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
  case ErrorCode::InvalidScenario: return "INVALID_SCENARIO";
  case ErrorCode::NegativeEntry: return "NEGATIVE_ENTRY";
  case ErrorCode::UnnormalizedContext: return "UNNORMALIZED_CONTEXT";
  case ErrorCode::MissingContext: return "MISSING_CONTEXT";
  case ErrorCode::NonBinarySetting: return "NON_BINARY_SETTING";
  case ErrorCode::ScenarioMismatch: return "SCENARIO_MISMATCH";
  case ErrorCode::BadWeights: return "BAD_WEIGHTS";
  case ErrorCode::ModelInvalid: return "MODEL_INVALID";
  case ErrorCode::UnknownCause: return "UNKNOWN_CAUSE";
  case ErrorCode::AnglesMissing: return "ANGLES_MISSING";
  case ErrorCode::ScenarioShape: return "SCENARIO_SHAPE";
  case ErrorCode::NumericInputUnnormalized: return "NUMERIC_INPUT_UNNORMALIZED";
  case ErrorCode::UnsampledContext: return "UNSAMPLED_CONTEXT";
  case ErrorCode::UnknownBuiltin: return "UNKNOWN_BUILTIN";
  case ErrorCode::InvalidPlan: return "INVALID_PLAN";
  case ErrorCode::InvariantViolation: return "INVARIANT_VIOLATION";
  }
  return "UNKNOWN";
}

/// Thrown by every library operation that rejects its input.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace bellbox

#pragma once

#include <stdexcept>
#include <string>

namespace masc {

// Stable error codes used by exceptions and validation reports.
enum class ErrorCode {
  MissingCell,
  NonNumeric,
  DuplicateCell,
  UnknownColumn,
  UnknownUnit,
  UnknownPeriod,
  UnknownCovariate,
  OverlappingPools,
  DonorPoolTooSmall,
  TooFewPeriods,
  EmptySpecList,
  WindowCrossesIntervention,
  WindowOutOfRange,
  LagBeforeIntervention,
  ZeroOrNegativeUserWeight,
  EqualPrePostWithoutPostLabels,
  DimensionMismatch,
  NonConvergence,
  PeriodMisalignment,
  TooFewTreated,
  EmptyWindow,
  NotEstimated,
  InsufficientUnits,
  ConfigError,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::NonNumeric: return "NonNumeric";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::UnknownUnit: return "UnknownUnit";
    case ErrorCode::UnknownPeriod: return "UnknownPeriod";
    case ErrorCode::UnknownCovariate: return "UnknownCovariate";
    case ErrorCode::OverlappingPools: return "OverlappingPools";
    case ErrorCode::DonorPoolTooSmall: return "DonorPoolTooSmall";
    case ErrorCode::TooFewPeriods: return "TooFewPeriods";
    case ErrorCode::EmptySpecList: return "EmptySpecList";
    case ErrorCode::WindowCrossesIntervention: return "WindowCrossesIntervention";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::LagBeforeIntervention: return "LagBeforeIntervention";
    case ErrorCode::ZeroOrNegativeUserWeight: return "ZeroOrNegativeUserWeight";
    case ErrorCode::EqualPrePostWithoutPostLabels: return "EqualPrePostWithoutPostLabels";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::PeriodMisalignment: return "PeriodMisalignment";
    case ErrorCode::TooFewTreated: return "TooFewTreated";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NotEstimated: return "NotEstimated";
    case ErrorCode::InsufficientUnits: return "InsufficientUnits";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

// Non-fatal diagnostics surfaced alongside results.
struct Warning {
  std::string code;
  std::string message;
};

}  // namespace masc

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hbf {

enum class ErrorCode {
  NotHermitian,
  NotPSD,
  SingularForInverse,
  KOutOfRange,
  ZeroMatrix,
  NotSquare,
  DimensionMismatch,
  InvalidSize,
  InvalidParameter,
  TooManyGains,
  InvalidSigma,
  SingularInterference,
  RankDeficientAnalog,
  SingularInner,
  SingularB,
  SingularGram,
  InnerSolverFailure,
  EmptyDictionary,
  RepeatSelectionExhausted,
  InRangeSpace,
  DictionaryExhausted,
  RankTooLow,
  UnknownPreset,
  InvalidConfig,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::SingularForInverse: return "SingularForInverse";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::TooManyGains: return "TooManyGains";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::SingularInterference: return "SingularInterference";
    case ErrorCode::RankDeficientAnalog: return "RankDeficientAnalog";
    case ErrorCode::SingularInner: return "SingularInner";
    case ErrorCode::SingularB: return "SingularB";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::InnerSolverFailure: return "InnerSolverFailure";
    case ErrorCode::EmptyDictionary: return "EmptyDictionary";
    case ErrorCode::RepeatSelectionExhausted: return "RepeatSelectionExhausted";
    case ErrorCode::InRangeSpace: return "InRangeSpace";
    case ErrorCode::DictionaryExhausted: return "DictionaryExhausted";
    case ErrorCode::RankTooLow: return "RankTooLow";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` lets
/// callers and tests branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hbf

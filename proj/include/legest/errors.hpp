#pragma once

#include <stdexcept>
#include <string>

namespace legest {

// Hard failure categories. Recoverable conditions (a skipped update, a foot
// not in contact) are reported through return values instead of exceptions.
enum class ErrorCode {
  // math_core
  FewerThanFourControlPoints,
  InvalidControlPointCount,
  SampleTimeOutOfRange,
  NonMonotoneKnots,
  // orientation_ekf
  NonPositiveDt,
  FreeFallSample,
  HighAccelSample,
  VoTimestampTooOld,
  // qp_solver / kkt / marginalization
  DimensionMismatch,
  NonSymmetricHessian,
  RankDeficientConstraints,
  IndefiniteReducedHessian,
  SingularKkt,
  SingularK00,
  Group0NotClosed,
  // mhe_core
  ClockRegression,
  NonConsecutiveNodes,
  UnsortedVoFrames,
  NoSampleForFoot,
  VelocityFormWithoutContact,
  // io
  LogParse,
  ConfigParse,
  IoFailure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace legest

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace focusplus {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  UnknownCourseType,
  NoFace,
  DegenerateFace,
  NonFiniteInput,
  EmptyDataset,
  FormatVersionMismatch,
  CorruptWeights,
  InsufficientSamples,
  RankDeficient,
  InfeasibleNu,
  NonFiniteFeature,
  NonConvergence,
  ModelNotTrained,
  InsufficientTrainingFrames,
  InsufficientCalibration,
  DegenerateGeometry,
  InvalidSpec,
  MalformedHeader,
  MalformedRecord,
  FrameCountMismatch,
  NonMonotoneTimestamp,
  InsufficientData,
  ZeroWithinVariance,
  InvalidAlpha,
  DegenerateTable,
  WrongItemCount,
  OutOfRangeAnswer,
  UnknownSession,
  SchemaViolation,
  OutOfOrderPacket,
  UnknownClass,
  Unauthorized,
  IoError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure the engine reports. `code()` is stable and machine-checkable,
/// `what()` carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace focusplus

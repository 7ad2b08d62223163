#include "focusplus/error.hpp"

namespace focusplus {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownCourseType: return "UnknownCourseType";
    case ErrorCode::NoFace: return "NoFace";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptWeights: return "CorruptWeights";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InfeasibleNu: return "InfeasibleNu";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ModelNotTrained: return "ModelNotTrained";
    case ErrorCode::InsufficientTrainingFrames: return "InsufficientTrainingFrames";
    case ErrorCode::InsufficientCalibration: return "InsufficientCalibration";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ZeroWithinVariance: return "ZeroWithinVariance";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::DegenerateTable: return "DegenerateTable";
    case ErrorCode::WrongItemCount: return "WrongItemCount";
    case ErrorCode::OutOfRangeAnswer: return "OutOfRangeAnswer";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::OutOfOrderPacket: return "OutOfOrderPacket";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace focusplus

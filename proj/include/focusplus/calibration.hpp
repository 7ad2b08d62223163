#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "focusplus/types.hpp"

namespace focusplus::calibration {

struct ScreenPoint {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const ScreenPoint&, const ScreenPoint&) = default;
};

struct CalibrationPlan {
  std::vector<ScreenPoint> targets;
  std::int64_t dwell_ms = 1500;
  std::int64_t settle_ms = 500;

  /// 3x3 grid at 0.1 / 0.5 / 0.9, row by row.
  static CalibrationPlan default_grid();
  /// Throws InsufficientCalibration (fewer than 3 targets or all collinear) or InvalidArgument.
  void validate() const;
};

/// Affine map from raw gaze to normalized screen coordinates: s = A g + b.
struct GazeMap {
  std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  std::array<double, 2> b{0.0, 0.0};
  double rms_residual = 0.0;
  std::size_t samples_used = 0;

  static GazeMap identity() { return {}; }
  friend bool operator==(const GazeMap&, const GazeMap&) = default;
};

/// One raw-gaze measurement taken while `target_index` was on screen.
struct CalibrationSample {
  std::int64_t timestamp_ms = 0;
  std::size_t target_index = 0;
  bool face_present = true;
  Gaze raw;
};

/// Averages each target's samples over its dwell window (the first settle_ms
/// after the target's first sample are discarded, as are no-face samples), then
/// fits A and b by ordinary least squares.
/// Throws InsufficientCalibration or DegenerateGeometry (condition number > 1e12).
GazeMap run_calibration(const CalibrationPlan& plan, std::span<const CalibrationSample> samples);

/// A g + b, clamped to [-0.5, 1.5] on both axes.
ScreenPoint apply_gaze_map(const GazeMap& map, Gaze raw) noexcept;

/// Single-owner target sequencer for one calibration run.
class CalibrationSession {
 public:
  explicit CalibrationSession(CalibrationPlan plan);

  const CalibrationPlan& plan() const noexcept { return plan_; }
  std::size_t current_target() const noexcept { return current_; }
  bool finished() const noexcept { return current_ >= plan_.targets.size(); }

  /// Records a sample for the current target. Throws InvalidArgument once finished.
  void record(std::int64_t timestamp_ms, bool face_present, Gaze raw);
  /// Moves to the next target.
  void advance();
  /// Fits the map from everything recorded so far.
  GazeMap fit() const;
  std::span<const CalibrationSample> samples() const noexcept { return samples_; }

 private:
  CalibrationPlan plan_;
  std::size_t current_ = 0;
  std::vector<CalibrationSample> samples_;
};

void write_gaze_map(const GazeMap& map, std::ostream& out);
GazeMap parse_gaze_map(std::string_view line);

}  // namespace focusplus::calibration

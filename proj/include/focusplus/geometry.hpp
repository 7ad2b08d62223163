#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "focusplus/types.hpp"

namespace focusplus {

struct EyeIndices {
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t upper = 0;  // upper lid
  std::size_t lower = 0;  // lower lid
  std::size_t iris = 0;   // iris center
};

/// Reference neutral face plus the index sets the geometry reads.
///
/// File format (text, line oriented):
///
///   FPFT 1
///   landmark_count <n>
///   anchors <i> <i> ...
///   eye right outer=<i> inner=<i> upper=<i> lower=<i> iris=<i>
///   eye left  outer=<i> inner=<i> upper=<i> lower=<i> iris=<i>
///   group <name> <i> ...          (zero or more; deformation handles)
///   points
///   <x> <y> <z>                   (n lines)
class CanonicalFaceTemplate {
 public:
  /// Validates indices and that the anchor set is at least 4 non-coplanar points.
  CanonicalFaceTemplate(std::vector<Point3> points, std::vector<std::size_t> anchors, EyeIndices right_eye,
                        EyeIndices left_eye, std::map<std::string, std::vector<std::size_t>> groups = {});

  static CanonicalFaceTemplate parse(std::istream& in);
  static CanonicalFaceTemplate load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  std::size_t landmark_count() const noexcept { return points_.size(); }
  const std::vector<Point3>& points() const noexcept { return points_; }
  const std::vector<std::size_t>& anchors() const noexcept { return anchors_; }
  const EyeIndices& right_eye() const noexcept { return right_eye_; }
  const EyeIndices& left_eye() const noexcept { return left_eye_; }
  const std::map<std::string, std::vector<std::size_t>>& groups() const noexcept { return groups_; }
  /// Empty span for unknown group names.
  std::span<const std::size_t> group(const std::string& name) const;

  LandmarkFrame as_frame(std::int64_t timestamp_ms = 0) const { return {timestamp_ms, true, points_}; }

 private:
  std::vector<Point3> points_;
  std::vector<std::size_t> anchors_;
  EyeIndices right_eye_;
  EyeIndices left_eye_;
  std::map<std::string, std::vector<std::size_t>> groups_;
};

/// Row-major 3x3 rotation.
struct Rotation {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(int r, int c) const noexcept { return m[static_cast<std::size_t>(3 * r + c)]; }
  Point3 apply(const Point3& p) const noexcept;
  double determinant() const noexcept;
  friend Rotation operator*(const Rotation& a, const Rotation& b) noexcept;
};

/// R = Ry(yaw) * Rx(pitch) * Rz(roll), angles in degrees. Axes follow the
/// landmark space: x right, y down, z depth.
Rotation rotation_from_euler(double yaw_deg, double pitch_deg, double roll_deg) noexcept;
/// Inverse of rotation_from_euler. Flags gimbal lock when |pitch| >= 89.999
/// and then reports roll = 0.
HeadPose euler_from_rotation(const Rotation& r) noexcept;

/// Rotates every point of the frame about `center`.
LandmarkFrame rotate_frame(const LandmarkFrame& frame, const Rotation& r, const Point3& center);
Point3 centroid(std::span<const Point3> points) noexcept;

/// Centroid at the origin, outer-corner to outer-corner distance 1.
std::vector<Point3> normalize_landmarks(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl);
/// x, y, z interleaved in landmark order.
std::vector<double> flatten(std::span<const Point3> points);

/// Least-squares rotation taking the template anchors onto the frame anchors
/// (Kabsch with centroid removal and RMS scale normalization on both sides).
/// The result never contains a reflection.
Rotation fit_head_rotation(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl);
HeadPose estimate_head_pose(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl);

Gaze estimate_eye_gaze(const LandmarkFrame& frame, const EyeIndices& eye);
/// Two-eye average of estimate_eye_gaze, clamped to [-2, 2].
Gaze estimate_gaze(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl);

}  // namespace focusplus

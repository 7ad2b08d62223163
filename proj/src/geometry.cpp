#include "focusplus/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Point3 sub(const Point3& a, const Point3& b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot3(const Point3& a, const Point3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm3(const Point3& a) noexcept { return std::sqrt(dot3(a, a)); }
Point3 scale3(const Point3& a, double s) noexcept { return {a.x * s, a.y * s, a.z * s}; }

void require_face(const LandmarkFrame& frame) {
  if (!frame.face_present) throw Error(ErrorCode::NoFace, "frame at t=" + std::to_string(frame.timestamp_ms));
}

void require_index(std::size_t idx, std::size_t count, const char* what) {
  if (idx >= count) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " index " + std::to_string(idx) + " out of range");
  }
}

// Singular values (descending) of the centered point cloud.
Eigen::Vector3d spread(const std::vector<Point3>& pts) {
  const Point3 c = centroid(pts);
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    Eigen::Vector3d v(p.x - c.x, p.y - c.y, p.z - c.z);
    scatter += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return {ev(2), ev(1), ev(0)};
}

std::vector<Point3> gather(std::span<const Point3> points, std::span<const std::size_t> idx) {
  std::vector<Point3> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(points[i]);
  return out;
}

EyeIndices parse_eye(const RecordLine& rec) {
  auto get = [&](std::string_view key) { return static_cast<std::size_t>(parse_int(rec.at(key))); };
  return {get("outer"), get("inner"), get("upper"), get("lower"), get("iris")};
}

}  // namespace

CanonicalFaceTemplate::CanonicalFaceTemplate(std::vector<Point3> points, std::vector<std::size_t> anchors,
                                             EyeIndices right_eye, EyeIndices left_eye,
                                             std::map<std::string, std::vector<std::size_t>> groups)
    : points_(std::move(points)),
      anchors_(std::move(anchors)),
      right_eye_(right_eye),
      left_eye_(left_eye),
      groups_(std::move(groups)) {
  const std::size_t n = points_.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "template has no points");
  for (auto i : anchors_) require_index(i, n, "anchor");
  for (const EyeIndices* eye : {&right_eye_, &left_eye_}) {
    for (auto i : {eye->outer, eye->inner, eye->upper, eye->lower, eye->iris}) require_index(i, n, "eye");
  }
  for (const auto& [name, idx] : groups_) {
    for (auto i : idx) require_index(i, n, "group");
  }
  if (anchors_.size() < 4) throw Error(ErrorCode::InvalidArgument, "template needs at least 4 anchors");
  const Eigen::Vector3d sv = spread(gather(points_, anchors_));
  if (sv(2) <= 1e-9 * sv(0)) throw Error(ErrorCode::InvalidArgument, "template anchors are coplanar");
}

std::span<const std::size_t> CanonicalFaceTemplate::group(const std::string& name) const {
  auto it = groups_.find(name);
  if (it == groups_.end()) return {};
  return it->second;
}

CanonicalFaceTemplate CanonicalFaceTemplate::parse(std::istream& in) {
  std::string line;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next() || line.rfind("FPFT ", 0) != 0) throw Error(ErrorCode::MalformedHeader, "not a face template file");
  if (line != "FPFT 1") throw Error(ErrorCode::FormatVersionMismatch, "face template version '" + line + "'");

  std::size_t count = 0;
  std::vector<std::size_t> anchors;
  EyeIndices right{}, left{};
  bool have_right = false, have_left = false;
  std::map<std::string, std::vector<std::size_t>> groups;

  while (next() && line != "points") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "landmark_count") {
      ls >> count;
    } else if (key == "anchors") {
      std::size_t i;
      while (ls >> i) anchors.push_back(i);
    } else if (key == "eye") {
      std::string side;
      ls >> side;
      RecordLine rec = RecordLine::parse("eye" + line.substr(line.find(side) + side.size()));
      (side == "right" ? right : left) = parse_eye(rec);
      (side == "right" ? have_right : have_left) = true;
    } else if (key == "group") {
      std::string name;
      ls >> name;
      std::size_t i;
      while (ls >> i) groups[name].push_back(i);
    } else {
      throw Error(ErrorCode::MalformedHeader, "unknown template key '" + key + "'");
    }
  }
  if (line != "points" || count == 0 || !have_right || !have_left) {
    throw Error(ErrorCode::MalformedHeader, "incomplete face template header");
  }
  std::vector<Point3> pts;
  pts.reserve(count);
  while (pts.size() < count && next()) {
    std::istringstream ls(line);
    Point3 p;
    if (!(ls >> p.x >> p.y >> p.z)) throw Error(ErrorCode::MalformedRecord, "bad template point '" + line + "'");
    pts.push_back(p);
  }
  if (pts.size() != count) throw Error(ErrorCode::FrameCountMismatch, "template declares " + std::to_string(count) +
                                                                          " points, file has " + std::to_string(pts.size()));
  return CanonicalFaceTemplate(std::move(pts), std::move(anchors), right, left, std::move(groups));
}

CanonicalFaceTemplate CanonicalFaceTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open face template " + path.string());
  return parse(in);
}

void CanonicalFaceTemplate::write(std::ostream& out) const {
  out << "FPFT 1\nlandmark_count " << points_.size() << "\nanchors";
  for (auto i : anchors_) out << ' ' << i;
  out << '\n';
  for (auto [side, eye] : {std::pair{"right", &right_eye_}, std::pair{"left", &left_eye_}}) {
    out << "eye " << side << " outer=" << eye->outer << " inner=" << eye->inner << " upper=" << eye->upper
        << " lower=" << eye->lower << " iris=" << eye->iris << '\n';
  }
  for (const auto& [name, idx] : groups_) {
    out << "group " << name;
    for (auto i : idx) out << ' ' << i;
    out << '\n';
  }
  out << "points\n";
  for (const auto& p : points_) out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
}

Point3 Rotation::apply(const Point3& p) const noexcept {
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z, m[3] * p.x + m[4] * p.y + m[5] * p.z,
          m[6] * p.x + m[7] * p.y + m[8] * p.z};
}

double Rotation::determinant() const noexcept {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Rotation operator*(const Rotation& a, const Rotation& b) noexcept {
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r.m[static_cast<std::size_t>(3 * i + j)] = s;
    }
  return r;
}

Rotation rotation_from_euler(double yaw_deg, double pitch_deg, double roll_deg) noexcept {
  const double a = yaw_deg / kDeg, b = pitch_deg / kDeg, c = roll_deg / kDeg;
  const Rotation ry{{std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a)}};
  const Rotation rx{{1, 0, 0, 0, std::cos(b), -std::sin(b), 0, std::sin(b), std::cos(b)}};
  const Rotation rz{{std::cos(c), -std::sin(c), 0, std::sin(c), std::cos(c), 0, 0, 0, 1}};
  return ry * rx * rz;
}

HeadPose euler_from_rotation(const Rotation& r) noexcept {
  auto wrap = [](double deg) { return deg <= -180.0 ? deg + 360.0 : deg; };
  HeadPose pose;
  const double s = std::clamp(-r(1, 2), -1.0, 1.0);
  pose.pitch = std::asin(s) * kDeg;
  if (std::abs(pose.pitch) >= 89.999) {
    pose.gimbal_lock = true;
    pose.roll = 0.0;
    pose.yaw = wrap((s > 0 ? std::atan2(r(0, 1), r(0, 0)) : std::atan2(-r(0, 1), r(0, 0))) * kDeg);
    return pose;
  }
  pose.yaw = wrap(std::atan2(r(0, 2), r(2, 2)) * kDeg);
  pose.roll = wrap(std::atan2(r(1, 0), r(1, 1)) * kDeg);
  return pose;
}

Point3 centroid(std::span<const Point3> points) noexcept {
  Point3 c;
  for (const auto& p : points) {
    c.x += p.x;
    c.y += p.y;
    c.z += p.z;
  }
  const double n = points.empty() ? 1.0 : static_cast<double>(points.size());
  return scale3(c, 1.0 / n);
}

LandmarkFrame rotate_frame(const LandmarkFrame& frame, const Rotation& r, const Point3& center) {
  LandmarkFrame out = frame;
  for (auto& p : out.points) {
    const Point3 q = r.apply(sub(p, center));
    p = {q.x + center.x, q.y + center.y, q.z + center.z};
  }
  return out;
}

std::vector<Point3> normalize_landmarks(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl) {
  require_face(frame);
  validate_frame(frame, tmpl.landmark_count());
  const double iod = norm3(sub(frame.points[tmpl.right_eye().outer], frame.points[tmpl.left_eye().outer]));
  if (iod < 1e-9) throw Error(ErrorCode::DegenerateFace, "inter-ocular distance " + std::to_string(iod));
  const Point3 c = centroid(frame.points);
  std::vector<Point3> out;
  out.reserve(frame.points.size());
  for (const auto& p : frame.points) out.push_back(scale3(sub(p, c), 1.0 / iod));
  return out;
}

std::vector<double> flatten(std::span<const Point3> points) {
  std::vector<double> v;
  v.reserve(points.size() * 3);
  for (const auto& p : points) {
    v.push_back(p.x);
    v.push_back(p.y);
    v.push_back(p.z);
  }
  return v;
}

Rotation fit_head_rotation(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl) {
  require_face(frame);
  validate_frame(frame, tmpl.landmark_count());

  const std::vector<Point3> src = gather(tmpl.points(), tmpl.anchors());
  const std::vector<Point3> dst = gather(frame.points, tmpl.anchors());
  const Eigen::Vector3d sv = spread(dst);
  if (sv(0) < 1e-12 || sv(1) <= 1e-9 * sv(0)) throw Error(ErrorCode::DegenerateFace, "anchor landmarks are collinear");

  auto centered_unit = [](const std::vector<Point3>& pts) {
    const Point3 c = centroid(pts);
    Eigen::Matrix3Xd m(3, pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) << pts[i].x - c.x, pts[i].y - c.y, pts[i].z - c.z;
    const double rms = std::sqrt(m.squaredNorm() / static_cast<double>(pts.size()));
    return Eigen::Matrix3Xd(m / rms);
  };
  const Eigen::Matrix3Xd p = centered_unit(src);
  const Eigen::Matrix3Xd q = centered_unit(dst);

  const Eigen::Matrix3d h = p * q.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d rot = v * fix * u.transpose();

  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[static_cast<std::size_t>(3 * i + j)] = rot(i, j);
  return r;
}

HeadPose estimate_head_pose(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl) {
  return euler_from_rotation(fit_head_rotation(frame, tmpl));
}

Gaze estimate_eye_gaze(const LandmarkFrame& frame, const EyeIndices& eye) {
  require_face(frame);
  const Point3 outer = frame.points.at(eye.outer);
  const Point3 inner = frame.points.at(eye.inner);
  const Point3 axis = sub(outer, inner);
  const double width = norm3(axis);
  if (width < 1e-9) throw Error(ErrorCode::DegenerateFace, "eye corner distance " + std::to_string(width));
  const Point3 u = scale3(axis, 1.0 / width);

  // Lid axis (lower -> upper) with its component along the corner axis removed.
  Point3 lid = sub(frame.points.at(eye.upper), frame.points.at(eye.lower));
  lid = sub(lid, scale3(u, dot3(lid, u)));
  const double lid_len = norm3(lid);
  if (lid_len < 1e-12) throw Error(ErrorCode::DegenerateFace, "eye lid axis is parallel to the corner axis");
  const Point3 v = scale3(lid, 1.0 / lid_len);

  const Point3 center = scale3({outer.x + inner.x, outer.y + inner.y, outer.z + inner.z}, 0.5);
  const Point3 offset = sub(frame.points.at(eye.iris), center);
  const double half = 0.5 * width;
  return {dot3(offset, u) / half, dot3(offset, v) / half};
}

Gaze estimate_gaze(const LandmarkFrame& frame, const CanonicalFaceTemplate& tmpl) {
  require_face(frame);
  validate_frame(frame, tmpl.landmark_count());
  const Gaze r = estimate_eye_gaze(frame, tmpl.right_eye());
  const Gaze l = estimate_eye_gaze(frame, tmpl.left_eye());
  return {std::clamp(0.5 * (r.gx + l.gx), -2.0, 2.0), std::clamp(0.5 * (r.gy + l.gy), -2.0, 2.0)};
}

}  // namespace focusplus

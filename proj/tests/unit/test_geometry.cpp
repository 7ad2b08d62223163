#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "expect.hpp"
#include "focusplus/geometry.hpp"
#include "oracles.hpp"

using namespace focusplus;
using oracle::thrown;

namespace {

const CanonicalFaceTemplate& tmpl() { return oracle::face_template(); }

// Rotation matrices written out from the axis definitions, independent of the library.
Rotation ry(double deg) {
  const double a = deg * M_PI / 180.0, c = std::cos(a), s = std::sin(a);
  return {{c, 0, s, 0, 1, 0, -s, 0, c}};
}
Rotation rx(double deg) {
  const double a = deg * M_PI / 180.0, c = std::cos(a), s = std::sin(a);
  return {{1, 0, 0, 0, c, -s, 0, s, c}};
}
Rotation rz(double deg) {
  const double a = deg * M_PI / 180.0, c = std::cos(a), s = std::sin(a);
  return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

LandmarkFrame rotated_template(const Rotation& r) {
  const auto f = tmpl().as_frame();
  return rotate_frame(f, r, centroid(f.points));
}

LandmarkFrame transformed(const LandmarkFrame& f, double scale, Point3 shift) {
  LandmarkFrame out = f;
  for (auto& p : out.points) p = {scale * p.x + shift.x, scale * p.y + shift.y, scale * p.z + shift.z};
  return out;
}

Point3 lerp(const Point3& a, const Point3& b, double t) {
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
}

// Places each iris on the corner axis, `offset` corner distances from the midpoint towards the outer corner.
LandmarkFrame with_iris(double right_offset, double left_offset) {
  LandmarkFrame f = tmpl().as_frame();
  for (auto [eye, off] : {std::pair{tmpl().right_eye(), right_offset}, std::pair{tmpl().left_eye(), left_offset}}) {
    const Point3 mid = lerp(f.points[eye.inner], f.points[eye.outer], 0.5);
    const Point3 outer = f.points[eye.outer], inner = f.points[eye.inner];
    f.points[eye.iris] = {mid.x + off * (outer.x - inner.x), mid.y + off * (outer.y - inner.y),
                          mid.z + off * (outer.z - inner.z)};
  }
  return f;
}

double dist(const Point3& a, const Point3& b) { return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z); }

}  // namespace

TEST_CASE("template file loads, validates and round-trips") {
  CHECK(tmpl().landmark_count() == 478);
  CHECK(tmpl().anchors().size() >= 4);
  std::stringstream ss;
  tmpl().write(ss);
  const auto again = CanonicalFaceTemplate::parse(ss);
  CHECK(again.points() == tmpl().points());
  CHECK(again.anchors() == tmpl().anchors());

  std::vector<Point3> flat{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 3, 0}};
  CHECK(thrown([&] { CanonicalFaceTemplate(flat, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}); }) ==
        "InvalidArgument");
  std::vector<Point3> solid{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  CHECK(thrown([&] { CanonicalFaceTemplate(solid, {0, 1, 2, 3}, {0, 1, 2, 3, 9}, {0, 1, 2, 3, 4}); }) ==
        "InvalidArgument");
  CHECK(thrown([&] { CanonicalFaceTemplate(solid, {0, 1, 2}, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}); }) == "InvalidArgument");
  std::stringstream wrong("FPFT 2\n");
  CHECK(thrown([&] { CanonicalFaceTemplate::parse(wrong); }) == "FormatVersionMismatch");
}

TEST_CASE("normalized landmarks: unit inter-ocular distance, translation and scale invariant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.002);
  LandmarkFrame f = rotated_template(rotation_from_euler(12, -7, 3));
  for (auto& p : f.points) p = {p.x + n(rng), p.y + n(rng), p.z + n(rng)};
  const auto base = normalize_landmarks(f, tmpl());
  CHECK(std::abs(dist(base[tmpl().right_eye().outer], base[tmpl().left_eye().outer]) - 1.0) < 1e-12);
  const Point3 c = centroid(base);
  CHECK(std::abs(c.x) < 1e-12);
  CHECK(std::abs(c.y) < 1e-12);
  CHECK(std::abs(c.z) < 1e-12);

  for (const auto& g : {transformed(f, 1.0, {0.3, -0.2, 0.7}), transformed(f, 3.0, {0, 0, 0}),
                        transformed(f, 0.25, {5, 5, -1})}) {
    const auto other = normalize_landmarks(g, tmpl());
    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) worst = std::max(worst, dist(base[i], other[i]));
    CHECK(worst < 1e-9);
  }
  CHECK(flatten(base).size() == 3 * base.size());
  CHECK(flatten(base)[4] == base[1].y);
}

TEST_CASE("normalization errors") {
  CHECK(thrown([] { normalize_landmarks(LandmarkFrame::no_face(0), tmpl()); }) == "NoFace");
  LandmarkFrame f{0, true, std::vector<Point3>(tmpl().landmark_count(), Point3{0.5, 0.5, 0})};
  CHECK(thrown([&] { normalize_landmarks(f, tmpl()); }) == "DegenerateFace");
}

TEST_CASE("head pose: self alignment is zero") {
  const auto pose = estimate_head_pose(tmpl().as_frame(), tmpl());
  CHECK(std::abs(pose.yaw) < 1e-9);
  CHECK(std::abs(pose.pitch) < 1e-9);
  CHECK(std::abs(pose.roll) < 1e-9);
  CHECK_FALSE(pose.gimbal_lock);
}

TEST_CASE("head pose: constructed yaw of 30 degrees") {
  const auto pose = estimate_head_pose(rotated_template(ry(30.0)), tmpl());
  CHECK(std::abs(pose.yaw - 30.0) < 1e-6);
  CHECK(std::abs(pose.pitch) < 1e-6);
  CHECK(std::abs(pose.roll) < 1e-6);
}

TEST_CASE("euler convention is R = Ry * Rx * Rz") {
  const Rotation r = rotation_from_euler(20, -15, 40);
  const Rotation expected = ry(20) * rx(-15) * rz(40);
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(r.m[i] - expected.m[i]) < 1e-15);
  const auto back = euler_from_rotation(r);
  CHECK(std::abs(back.yaw - 20) < 1e-9);
  CHECK(std::abs(back.pitch + 15) < 1e-9);
  CHECK(std::abs(back.roll - 40) < 1e-9);
  const auto locked = euler_from_rotation(rotation_from_euler(10, 90, 5));
  CHECK(locked.gimbal_lock);
  CHECK(locked.roll == 0.0);
}

TEST_CASE("head pose: composition of two rotations") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  for (int i = 0; i < 50; ++i) {
    const Rotation r1 = rotation_from_euler(u(rng), u(rng), u(rng));
    const Rotation r2 = rotation_from_euler(u(rng), u(rng), u(rng));
    const auto f = tmpl().as_frame();
    const Point3 c = centroid(f.points);
    const auto twice = rotate_frame(rotate_frame(f, r1, c), r2, c);
    const auto pose = estimate_head_pose(twice, tmpl());
    const auto want = euler_from_rotation(r2 * r1);
    CHECK(std::abs(pose.yaw - want.yaw) < 1e-6);
    CHECK(std::abs(pose.pitch - want.pitch) < 1e-6);
    CHECK(std::abs(pose.roll - want.roll) < 1e-6);
  }
}

TEST_CASE("head pose: random rotations recovered within 1e-6 degrees") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-60.0, 60.0);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double yaw = u(rng), pitch = u(rng), roll = u(rng);
    const auto pose = estimate_head_pose(rotated_template(ry(yaw) * rx(pitch) * rz(roll)), tmpl());
    worst = std::max({worst, std::abs(pose.yaw - yaw), std::abs(pose.pitch - pitch), std::abs(pose.roll - roll)});
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("head pose is invariant to translation and uniform scale") {
  const auto f = rotated_template(rotation_from_euler(-18, 9, 4));
  const auto a = estimate_head_pose(f, tmpl());
  const auto b = estimate_head_pose(transformed(f, 2.5, {1.0, -3.0, 0.4}), tmpl());
  CHECK(std::abs(a.yaw - b.yaw) < 1e-9);
  CHECK(std::abs(a.pitch - b.pitch) < 1e-9);
  CHECK(std::abs(a.roll - b.roll) < 1e-9);
}

TEST_CASE("fitted rotation never contains a reflection") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.01);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    LandmarkFrame f = rotated_template(rotation_from_euler(u(rng), u(rng), u(rng)));
    for (auto& p : f.points) p = {p.x + n(rng), p.y + n(rng), p.z + n(rng)};
    if (i % 4 == 0)
      for (auto& p : f.points) p.x = -p.x;  // mirrored input: best proper rotation still required
    CHECK(std::abs(fit_head_rotation(f, tmpl()).determinant() - 1.0) < 1e-9);
  }
}

TEST_CASE("head pose errors") {
  CHECK(thrown([] { estimate_head_pose(LandmarkFrame::no_face(3), tmpl()); }) == "NoFace");
  LandmarkFrame f = tmpl().as_frame();
  for (std::size_t k = 0; k < tmpl().anchors().size(); ++k)
    f.points[tmpl().anchors()[k]] = {0.1 * static_cast<double>(k), 0.2 * static_cast<double>(k), 0.0};
  CHECK(thrown([&] { estimate_head_pose(f, tmpl()); }) == "DegenerateFace");
}

TEST_CASE("gaze: centered iris gives zero") {
  const Gaze g = estimate_gaze(with_iris(0.0, 0.0), tmpl());
  CHECK(std::abs(g.gx) < 1e-12);
  CHECK(std::abs(g.gy) < 1e-12);
}

TEST_CASE("gaze: iris 25% of the corner distance towards the outer corner gives 0.5") {
  const Gaze g = estimate_gaze(with_iris(0.25, 0.25), tmpl());
  CHECK(std::abs(g.gx - 0.5) < 1e-9);
  CHECK(std::abs(g.gy) < 1e-9);
}

TEST_CASE("gaze: two-eye average") {
  const auto f = with_iris(0.0, 0.2);
  CHECK(std::abs(estimate_eye_gaze(f, tmpl().left_eye()).gx - 0.4) < 1e-9);
  CHECK(std::abs(estimate_eye_gaze(f, tmpl().right_eye()).gx) < 1e-9);
  const Gaze g = estimate_gaze(f, tmpl());
  CHECK(std::abs(g.gx - 0.2) < 1e-9);
  CHECK(std::abs(g.gy) < 1e-9);
}

TEST_CASE("gaze: lid axis and clamping") {
  LandmarkFrame f = tmpl().as_frame();
  for (const auto& eye : {tmpl().right_eye(), tmpl().left_eye()}) {
    const Point3 mid = lerp(f.points[eye.inner], f.points[eye.outer], 0.5);
    f.points[eye.iris] = mid;
    // Lids symmetric about the corner midpoint, so the iris sits on both axes' centers.
    const Point3 up = f.points[eye.upper], lo = f.points[eye.lower];
    const Point3 lid_mid = lerp(up, lo, 0.5);
    f.points[eye.upper] = {up.x - lid_mid.x + mid.x, up.y - lid_mid.y + mid.y, up.z - lid_mid.z + mid.z};
    f.points[eye.lower] = {lo.x - lid_mid.x + mid.x, lo.y - lid_mid.y + mid.y, lo.z - lid_mid.z + mid.z};
  }
  CHECK(std::abs(estimate_gaze(f, tmpl()).gy) < 1e-12);
  // Move both irises towards the upper lid: gy grows positive.
  LandmarkFrame up = f;
  for (const auto& eye : {tmpl().right_eye(), tmpl().left_eye()})
    up.points[eye.iris] = lerp(up.points[eye.iris], up.points[eye.upper], 0.5);
  CHECK(estimate_gaze(up, tmpl()).gy > 0.0);
  const Gaze far = estimate_gaze(with_iris(10.0, 10.0), tmpl());
  CHECK(far.gx == 2.0);
}

TEST_CASE("gaze is invariant to translation and uniform scale") {
  const auto f = with_iris(0.1, -0.15);
  const Gaze a = estimate_gaze(f, tmpl());
  const Gaze b = estimate_gaze(transformed(f, 4.0, {-2.0, 0.5, 3.0}), tmpl());
  CHECK(std::abs(a.gx - b.gx) < 1e-9);
  CHECK(std::abs(a.gy - b.gy) < 1e-9);
}

TEST_CASE("gaze errors") {
  CHECK(thrown([] { estimate_gaze(LandmarkFrame::no_face(0), tmpl()); }) == "NoFace");
  LandmarkFrame f = tmpl().as_frame();
  f.points[tmpl().left_eye().outer] = f.points[tmpl().left_eye().inner];
  CHECK(thrown([&] { estimate_gaze(f, tmpl()); }) == "DegenerateFace");
}

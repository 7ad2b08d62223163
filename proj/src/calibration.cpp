#include "focusplus/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "focusplus/error.hpp"
#include "focusplus/linalg.hpp"
#include "focusplus/records.hpp"

namespace focusplus::calibration {

namespace {

bool collinear(std::span<const ScreenPoint> pts) {
  if (pts.size() < 3) return true;
  double scale = 0.0;
  for (const auto& p : pts)
    for (const auto& q : pts) scale = std::max(scale, std::hypot(p.u - q.u, p.v - q.v));
  if (scale == 0.0) return true;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const double cross = (pts[j].u - pts[i].u) * (pts[k].v - pts[i].v) - (pts[j].v - pts[i].v) * (pts[k].u - pts[i].u);
        if (std::abs(cross) > 1e-9 * scale * scale) return false;
      }
  return true;
}

}  // namespace

CalibrationPlan CalibrationPlan::default_grid() {
  CalibrationPlan plan;
  for (double v : {0.1, 0.5, 0.9})
    for (double u : {0.1, 0.5, 0.9}) plan.targets.push_back({u, v});
  return plan;
}

void CalibrationPlan::validate() const {
  if (dwell_ms <= 0 || settle_ms < 0 || settle_ms >= dwell_ms) {
    throw Error(ErrorCode::InvalidArgument, "need 0 <= settle_ms < dwell_ms");
  }
  if (targets.size() < 3) throw Error(ErrorCode::InsufficientCalibration, "a plan needs at least 3 targets");
  if (collinear(targets)) throw Error(ErrorCode::InsufficientCalibration, "plan targets are collinear");
}

GazeMap run_calibration(const CalibrationPlan& plan, std::span<const CalibrationSample> samples) {
  if (plan.dwell_ms <= 0 || plan.settle_ms < 0 || plan.settle_ms >= plan.dwell_ms) {
    throw Error(ErrorCode::InvalidArgument, "need 0 <= settle_ms < dwell_ms");
  }
  std::map<std::size_t, std::int64_t> onset;
  for (const auto& s : samples) {
    if (s.target_index >= plan.targets.size()) throw Error(ErrorCode::InvalidArgument, "sample for unknown target");
    auto [it, inserted] = onset.emplace(s.target_index, s.timestamp_ms);
    if (!inserted) it->second = std::min(it->second, s.timestamp_ms);
  }

  struct Acc {
    double gx = 0.0, gy = 0.0;
    std::size_t n = 0;
  };
  std::vector<Acc> acc(plan.targets.size());
  for (const auto& s : samples) {
    const std::int64_t since = s.timestamp_ms - onset[s.target_index];
    if (!s.face_present || since < plan.settle_ms || since >= plan.dwell_ms) continue;
    if (!std::isfinite(s.raw.gx) || !std::isfinite(s.raw.gy)) continue;
    auto& a = acc[s.target_index];
    a.gx += s.raw.gx;
    a.gy += s.raw.gy;
    ++a.n;
  }

  std::vector<std::size_t> usable;
  std::vector<ScreenPoint> usable_targets;
  std::size_t used = 0;
  for (std::size_t t = 0; t < acc.size(); ++t) {
    if (acc[t].n == 0) continue;
    usable.push_back(t);
    usable_targets.push_back(plan.targets[t]);
    used += acc[t].n;
  }
  if (usable.size() < 3 || collinear(usable_targets)) {
    throw Error(ErrorCode::InsufficientCalibration,
                std::to_string(usable.size()) + " usable targets; need 3 that are not collinear");
  }

  Matrix design(usable.size(), 3);
  Matrix rhs(usable.size(), 2);
  for (std::size_t r = 0; r < usable.size(); ++r) {
    const auto& a = acc[usable[r]];
    design(r, 0) = a.gx / static_cast<double>(a.n);
    design(r, 1) = a.gy / static_cast<double>(a.n);
    design(r, 2) = 1.0;
    rhs(r, 0) = plan.targets[usable[r]].u;
    rhs(r, 1) = plan.targets[usable[r]].v;
  }
  const double cond = condition_number(design);
  if (!(cond <= 1e12)) throw Error(ErrorCode::DegenerateGeometry, "gaze design matrix condition " + std::to_string(cond));

  const Matrix w = least_squares(design, rhs);
  GazeMap map;
  map.a = {w(0, 0), w(1, 0), w(0, 1), w(1, 1)};
  map.b = {w(2, 0), w(2, 1)};
  map.samples_used = used;
  double sq = 0.0;
  for (std::size_t r = 0; r < usable.size(); ++r) {
    const double du = map.a[0] * design(r, 0) + map.a[1] * design(r, 1) + map.b[0] - rhs(r, 0);
    const double dv = map.a[2] * design(r, 0) + map.a[3] * design(r, 1) + map.b[1] - rhs(r, 1);
    sq += du * du + dv * dv;
  }
  map.rms_residual = std::sqrt(sq / static_cast<double>(usable.size()));
  return map;
}

ScreenPoint apply_gaze_map(const GazeMap& m, Gaze raw) noexcept {
  const double u = m.a[0] * raw.gx + m.a[1] * raw.gy + m.b[0];
  const double v = m.a[2] * raw.gx + m.a[3] * raw.gy + m.b[1];
  return {std::clamp(u, -0.5, 1.5), std::clamp(v, -0.5, 1.5)};
}

CalibrationSession::CalibrationSession(CalibrationPlan plan) : plan_(std::move(plan)) { plan_.validate(); }

void CalibrationSession::record(std::int64_t timestamp_ms, bool face_present, Gaze raw) {
  if (finished()) throw Error(ErrorCode::InvalidArgument, "calibration already finished");
  samples_.push_back({timestamp_ms, current_, face_present, raw});
}

void CalibrationSession::advance() {
  if (!finished()) ++current_;
}

GazeMap CalibrationSession::fit() const { return run_calibration(plan_, samples_); }

void write_gaze_map(const GazeMap& m, std::ostream& out) {
  out << "gazemap a00=" << format_double(m.a[0]) << " a01=" << format_double(m.a[1]) << " a10=" << format_double(m.a[2])
      << " a11=" << format_double(m.a[3]) << " b0=" << format_double(m.b[0]) << " b1=" << format_double(m.b[1])
      << " rms=" << format_double(m.rms_residual) << " samples=" << m.samples_used << '\n';
}

GazeMap parse_gaze_map(std::string_view line) {
  RecordLine rec = RecordLine::parse(line);
  if (rec.tag != "gazemap") throw Error(ErrorCode::MalformedRecord, "expected gazemap record");
  GazeMap m;
  m.a = {parse_double(rec.at("a00")), parse_double(rec.at("a01")), parse_double(rec.at("a10")), parse_double(rec.at("a11"))};
  m.b = {parse_double(rec.at("b0")), parse_double(rec.at("b1"))};
  m.rms_residual = parse_double(rec.at("rms"));
  m.samples_used = static_cast<std::size_t>(parse_int(rec.at("samples")));
  return m;
}

}  // namespace focusplus::calibration

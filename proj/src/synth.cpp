#include "focusplus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "focusplus/error.hpp"
#include "focusplus/stream.hpp"

namespace focusplus::synth {

namespace {

constexpr double kFaceUnit = 0.15;  // template image units per face unit

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(rng); }

double exponential(std::mt19937_64& rng, double rate) noexcept { return -std::log1p(-uniform01(rng)) / rate; }

double round6(double v) noexcept { return std::round(v * 1e6) / 1e6; }

// One handle displacement of an expression, in face units, with Gaussian
// falloff (image units) to the surrounding landmarks.
struct Handle {
  const char* group;
  int member;  // -1: every member of the group
  double dx, dy, dz;
  double sigma = 0.012;
};

const std::vector<Handle>& expression_handles(EmotionLabel label) {
  static const std::array<std::vector<Handle>, kEmotionCount> table = [] {
    std::array<std::vector<Handle>, kEmotionCount> t;
    auto at = [&](EmotionLabel l) -> std::vector<Handle>& { return t[static_cast<std::size_t>(l)]; };
    at(EmotionLabel::Happiness) = {{"mouth_corner_right", -1, -0.06, -0.10, 0.0},
                                   {"mouth_corner_left", -1, 0.06, -0.10, 0.0},
                                   {"lower_lip", -1, 0.0, -0.02, 0.0}};
    at(EmotionLabel::Sadness) = {{"mouth_corner_right", -1, 0.02, 0.09, 0.0},
                                 {"mouth_corner_left", -1, -0.02, 0.09, 0.0},
                                 {"brow_right", 4, 0.0, -0.07, 0.0},
                                 {"brow_left", 4, 0.0, -0.07, 0.0},
                                 {"lower_lip", -1, 0.0, 0.03, 0.0}};
    at(EmotionLabel::Surprise) = {{"brow_right", -1, 0.0, -0.10, 0.0},
                                  {"brow_left", -1, 0.0, -0.10, 0.0},
                                  {"upper_lid_right", -1, 0.0, -0.03, 0.0, 0.005},
                                  {"upper_lid_left", -1, 0.0, -0.03, 0.0, 0.005},
                                  {"lower_lip", -1, 0.0, 0.16, 0.0},
                                  {"jaw", -1, 0.0, 0.12, 0.0}};
    at(EmotionLabel::Fear) = {{"brow_right", -1, 0.0, -0.06, 0.0},
                              {"brow_left", -1, 0.0, -0.06, 0.0},
                              {"brow_right", 4, 0.04, 0.0, 0.0},
                              {"brow_left", 4, -0.04, 0.0, 0.0},
                              {"mouth_corner_right", -1, -0.06, 0.03, 0.0},
                              {"mouth_corner_left", -1, 0.06, 0.03, 0.0},
                              {"lower_lip", -1, 0.0, 0.07, 0.0}};
    at(EmotionLabel::Disgust) = {{"upper_lip", -1, 0.0, -0.07, 0.0},
                                 {"brow_right", -1, 0.0, 0.04, 0.0},
                                 {"brow_left", -1, 0.0, 0.04, 0.0},
                                 {"mouth_corner_right", -1, 0.0, 0.03, 0.0},
                                 {"mouth_corner_left", -1, 0.0, 0.03, 0.0}};
    at(EmotionLabel::Anger) = {{"brow_right", -1, 0.0, 0.06, 0.0},
                               {"brow_left", -1, 0.0, 0.06, 0.0},
                               {"brow_right", 4, 0.04, 0.03, 0.0},
                               {"brow_left", 4, -0.04, 0.03, 0.0},
                               {"upper_lip", -1, 0.0, 0.02, 0.0},
                               {"lower_lip", -1, 0.0, -0.03, 0.0}};
    at(EmotionLabel::Contempt) = {{"mouth_corner_left", -1, 0.06, -0.08, 0.0}};
    at(EmotionLabel::None) = {{"lower_lip", -1, 0.0, 0.08, 0.0}, {"jaw", -1, 0.0, 0.05, 0.0}};
    at(EmotionLabel::Uncertain) = {{"brow_left", -1, 0.0, -0.07, 0.0},
                                   {"mouth_corner_right", -1, -0.03, 0.02, 0.0},
                                   {"upper_lip", -1, 0.03, 0.0, 0.0}};
    return t;
  }();
  return table[static_cast<std::size_t>(label)];
}

void displace(std::vector<Point3>& pts, const Point3& handle, double dx, double dy, double dz, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (auto& p : pts) {
    const double ex = p.x - handle.x, ey = p.y - handle.y, ez = p.z - handle.z;
    const double w = std::exp(-(ex * ex + ey * ey + ez * ez) * inv);
    if (w < 1e-6) continue;
    p.x += w * dx;
    p.y += w * dy;
    p.z += w * dz;
  }
}

void apply_handles(std::vector<Point3>& pts, const std::vector<Point3>& rest, const CanonicalFaceTemplate& tmpl,
                   const std::vector<Handle>& handles, double intensity) {
  for (const auto& h : handles) {
    const auto members = tmpl.group(h.group);
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (h.member >= 0 && static_cast<std::size_t>(h.member) != k) continue;
      displace(pts, rest[members[k]], intensity * kFaceUnit * h.dx, intensity * kFaceUnit * h.dy,
               intensity * kFaceUnit * h.dz, h.sigma);
    }
  }
}

double eye_half_width(const CanonicalFaceTemplate& tmpl, const EyeIndices& eye) {
  const Point3 a = tmpl.points()[eye.outer], b = tmpl.points()[eye.inner];
  return 0.5 * std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

}  // namespace

double uniform01(std::mt19937_64& rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) noexcept {
  // Box-Muller, one draw per call
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::int64_t> default_notification_schedule(double duration_s, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 11));
  std::vector<std::int64_t> out;
  const int minutes = std::max(1, static_cast<int>(duration_s / 60.0));
  const double slot = duration_s / minutes;
  for (int m = 0; m < minutes; ++m) {
    // keep clear of the slot edges so excursions never overlap or run off the end
    const double t = m * slot + uniform(rng, 0.2, 0.8) * std::max(0.0, slot - 6.0);
    out.push_back(static_cast<std::int64_t>(std::llround(t * 1000.0)));
  }
  return out;
}

SyntheticSessionSpec SyntheticSessionSpec::defaults(SessionKind kind, std::uint64_t seed, std::uint64_t user_seed) {
  SyntheticSessionSpec s;
  s.kind = kind;
  s.seed = seed;
  s.user_seed = user_seed;
  if (kind == SessionKind::DAS) s.notifications_ms = default_notification_schedule(s.duration_s, seed);
  return s;
}

void SyntheticSessionSpec::validate() const {
  auto bad = [](const std::string& m) { return Error(ErrorCode::InvalidSpec, m); };
  if (kind == SessionKind::LIVE) throw bad("synthetic sessions are FS, DAS or MWS");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw bad("duration_s must be positive");
  if (!(fps > 0.0) || !std::isfinite(fps) || fps > 1000.0) throw bad("fps must be in (0, 1000]");
  if (kind == SessionKind::DAS && notifications_ms.empty()) throw bad("DAS session needs at least one notification");
  if (kind != SessionKind::DAS && !notifications_ms.empty()) throw bad("only DAS sessions carry notifications");
  for (auto t : notifications_ms) {
    if (t < 0 || static_cast<double>(t) >= duration_s * 1000.0) throw bad("notification outside the session");
  }
  const Dynamics& d = dynamics;
  for (double v : {d.head_sigma_deg, d.gaze_sigma, d.jitter, d.blink_rate_hz, d.expression_rate_hz, d.no_face_rate_hz,
                   d.head_turn_deg, d.gaze_shift, d.gaze_drift}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw bad("dynamics parameters must be finite and non-negative");
  }
  if (!(d.head_tau_s > 0.0) || !(d.gaze_tau_s > 0.0)) throw bad("time constants must be positive");
  if (!(d.excursion_min_s > 0.0) || d.excursion_max_s < d.excursion_min_s) throw bad("bad excursion duration range");
  if (!(d.mw_min_s > 0.0) || d.mw_max_s < d.mw_min_s) throw bad("bad mind-wandering duration range");
  if (!(d.mw_motion_scale >= 0.0 && d.mw_motion_scale <= 1.0)) throw bad("mw_motion_scale must be in [0, 1]");
  if (!(d.no_face_max_s > 0.0)) throw bad("no_face_max_s must be positive");
  if (!session_id.empty() && !is_valid_identifier(session_id)) throw bad("invalid session id");
  if (!user_id.empty() && !is_valid_identifier(user_id)) throw bad("invalid user id");
}

std::size_t SyntheticSessionSpec::frame_count() const noexcept {
  return static_cast<std::size_t>(std::floor(duration_s * fps + 1e-9));
}

UserProfile UserProfile::neutral(const CanonicalFaceTemplate& tmpl) {
  UserProfile u;
  u.face = tmpl.points();
  return u;
}

UserProfile UserProfile::make(const CanonicalFaceTemplate& tmpl, std::uint64_t user_seed) {
  std::mt19937_64 rng(mix(user_seed, 7));
  UserProfile u;
  const Point3 c = centroid(tmpl.points());
  const double sx = uniform(rng, 0.94, 1.06), sy = uniform(rng, 0.94, 1.06), sz = uniform(rng, 0.94, 1.06);
  u.face.reserve(tmpl.landmark_count());
  for (const auto& p : tmpl.points()) {
    u.face.push_back({c.x + sx * (p.x - c.x) + 0.0015 * standard_normal(rng),
                      c.y + sy * (p.y - c.y) + 0.0015 * standard_normal(rng),
                      c.z + sz * (p.z - c.z) + 0.001 * standard_normal(rng)});
  }
  u.cam_dx = uniform(rng, -0.04, 0.04);
  u.cam_dy = uniform(rng, -0.04, 0.04);
  u.cam_scale = uniform(rng, 0.85, 1.15);
  u.yaw0 = uniform(rng, -4.0, 4.0);
  u.pitch0 = uniform(rng, -4.0, 4.0);
  return u;
}

std::vector<Point3> render_face(const CanonicalFaceTemplate& tmpl, const UserProfile& user, const FacePose& pose) {
  if (user.face.size() != tmpl.landmark_count()) {
    throw Error(ErrorCode::DimensionMismatch, "user face does not match the template");
  }
  std::vector<Point3> pts = user.face;
  for (std::size_t l = 0; l < kEmotionCount; ++l) {
    const double a = pose.expression[l];
    if (a != 0.0) apply_handles(pts, user.face, tmpl, expression_handles(static_cast<EmotionLabel>(l)), a);
  }
  if (pose.blink > 0.0) {
    for (const EyeIndices* eye : {&tmpl.right_eye(), &tmpl.left_eye()}) {
      const Point3 up = user.face[eye->upper], lo = user.face[eye->lower];
      displace(pts, up, 0.0, 0.85 * pose.blink * (lo.y - up.y), 0.0, 0.005);
    }
  }
  for (const auto* group : {"iris_right", "iris_left"}) {
    const EyeIndices& eye = std::string_view(group) == "iris_right" ? tmpl.right_eye() : tmpl.left_eye();
    const double hw = eye_half_width(tmpl, eye);
    for (std::size_t i : tmpl.group(group)) {
      pts[i].x += pose.gaze_x * hw;
      pts[i].y -= pose.gaze_y * hw;
    }
  }
  const Rotation r = rotation_from_euler(user.yaw0 + pose.yaw, user.pitch0 + pose.pitch, pose.roll);
  const Point3 c = centroid(user.face);
  for (auto& p : pts) {
    const Point3 q = r.apply({p.x - c.x, p.y - c.y, p.z - c.z});
    p = {c.x + user.cam_scale * q.x + user.cam_dx, c.y + user.cam_scale * q.y + user.cam_dy, user.cam_scale * q.z};
  }
  return pts;
}

double SessionGenerator::envelope(const Interval& iv, double t, double ramp) noexcept {
  if (t < iv.start || t >= iv.end) return 0.0;
  const double r = std::min(ramp, 0.5 * (iv.end - iv.start));
  double e = 1.0;
  const double rise = t - iv.start, fall = iv.end - t;
  if (rise < r) e = 0.5 - 0.5 * std::cos(std::numbers::pi * rise / r);
  if (fall < r) e = std::min(e, 0.5 - 0.5 * std::cos(std::numbers::pi * fall / r));
  return e;
}

SessionGenerator::SessionGenerator(SyntheticSessionSpec spec, const CanonicalFaceTemplate& tmpl)
    : spec_(std::move(spec)), tmpl_(tmpl) {
  spec_.validate();
  user_ = UserProfile::make(tmpl_, spec_.user_seed);
  total_ = spec_.frame_count();
  const double duration = spec_.duration_s;
  const Dynamics& d = spec_.dynamics;

  meta_.session_kind = spec_.kind;
  meta_.session_id = spec_.session_id.empty()
                         ? std::string(session_kind_name(spec_.kind)) + "-" + std::to_string(spec_.seed)
                         : spec_.session_id;
  meta_.user_id = spec_.user_id.empty() ? "user-" + std::to_string(spec_.user_seed) : spec_.user_id;
  meta_.course_type = spec_.course_type;
  meta_.started_at = spec_.started_at;
  meta_.landmark_count = tmpl_.landmark_count();

  std::mt19937_64 ev(mix(spec_.seed, 1));
  auto to_ms = [](double s) { return static_cast<std::int64_t>(std::llround(s * 1000.0)); };

  if (spec_.kind == SessionKind::DAS) {
    std::vector<std::int64_t> notes = spec_.notifications_ms;
    std::sort(notes.begin(), notes.end());
    for (auto ms : notes) {
      Interval iv;
      iv.start = static_cast<double>(ms) / 1000.0;
      iv.end = std::min(duration, iv.start + uniform(ev, d.excursion_min_s, d.excursion_max_s));
      iv.sign = uniform01(ev) < 0.5 ? -1.0 : 1.0;
      iv.amplitude = uniform(ev, 0.8, 1.2);
      iv.gx = iv.sign * d.gaze_shift;
      iv.gy = -0.6 * d.gaze_shift;  // towards the phone / desk
      excursions_.push_back(iv);
      events_.push_back({ms, "notification", to_ms(iv.end)});
    }
  }
  if (spec_.kind == SessionKind::MWS) {
    double t = uniform(ev, 20.0, 60.0);
    while (t + d.mw_min_s <= duration) {
      Interval iv;
      iv.start = t;
      iv.end = std::min(duration, t + uniform(ev, d.mw_min_s, d.mw_max_s));
      iv.gx = uniform(ev, -0.5, 0.5) * d.gaze_drift;
      iv.gy = (uniform01(ev) < 0.5 ? -1.0 : 1.0) * d.gaze_drift * uniform(ev, 0.8, 1.2);
      wandering_.push_back(iv);
      events_.push_back({to_ms(iv.start), "mind_wandering", to_ms(iv.end)});
      t = iv.end + uniform(ev, 30.0, 60.0);
    }
  }
  if (d.expression_rate_hz > 0.0) {
    for (double t = exponential(ev, d.expression_rate_hz); t < duration; t += exponential(ev, d.expression_rate_hz)) {
      Interval iv;
      iv.start = t;
      iv.end = t + uniform(ev, 3.0, 8.0);
      iv.amplitude = uniform(ev, 0.3, 0.6);
      smiles_.push_back(iv);
      t = iv.end;
    }
  }
  if (spec_.kind != SessionKind::FS && d.no_face_rate_hz > 0.0) {
    for (double t = exponential(ev, d.no_face_rate_hz); t < duration; t += exponential(ev, d.no_face_rate_hz)) {
      Interval iv;
      iv.start = t;
      iv.end = t + uniform(ev, 0.1, d.no_face_max_s);
      dropouts_.push_back(iv);
      t = iv.end;
    }
  }

  motion_rng_.seed(mix(spec_.seed, 2));
  noise_rng_.seed(mix(spec_.seed, 3));
  // start the micro-motion processes in their stationary distribution
  yaw_ = d.head_sigma_deg * standard_normal(motion_rng_);
  pitch_ = 0.8 * d.head_sigma_deg * standard_normal(motion_rng_);
  roll_ = 0.5 * d.head_sigma_deg * standard_normal(motion_rng_);
  gx_ = d.gaze_sigma * standard_normal(motion_rng_);
  gy_ = d.gaze_sigma * standard_normal(motion_rng_);
}

std::optional<LandmarkFrame> SessionGenerator::next() {
  if (index_ >= total_) return std::nullopt;
  const Dynamics& d = spec_.dynamics;
  const double dt = 1.0 / spec_.fps;
  const double t = static_cast<double>(index_) * dt;
  const auto ts = static_cast<std::int64_t>(std::llround(static_cast<double>(index_) * 1000.0 / spec_.fps));
  ++index_;

  double mw = 0.0;
  Interval mw_iv;
  for (const auto& iv : wandering_) {
    const double e = envelope(iv, t, 5.0);
    if (e > mw) {
      mw = e;
      mw_iv = iv;
    }
  }

  // Ornstein-Uhlenbeck micro-motion; mind wandering damps the innovations.
  const double motion = 1.0 - (1.0 - d.mw_motion_scale) * mw;
  const double ah = std::exp(-dt / d.head_tau_s), ag = std::exp(-dt / d.gaze_tau_s);
  const double kh = d.head_sigma_deg * std::sqrt(1.0 - ah * ah) * motion;
  const double kg = d.gaze_sigma * std::sqrt(1.0 - ag * ag) * motion;
  yaw_ = ah * yaw_ + kh * standard_normal(motion_rng_);
  pitch_ = ah * pitch_ + 0.8 * kh * standard_normal(motion_rng_);
  roll_ = ah * roll_ + 0.5 * kh * standard_normal(motion_rng_);
  gx_ = ag * gx_ + kg * standard_normal(motion_rng_);
  gy_ = ag * gy_ + kg * standard_normal(motion_rng_);

  FacePose pose;
  pose.yaw = yaw_;
  pose.pitch = pitch_;
  pose.roll = roll_;
  pose.gaze_x = gx_ + mw * mw_iv.gx;
  pose.gaze_y = gy_ + mw * mw_iv.gy;

  // blinks: ~0.2 s, closing and reopening
  constexpr double kBlink = 0.2;
  if (blink_left_ > 0.0) {
    blink_left_ -= dt;
  } else if (uniform01(motion_rng_) < d.blink_rate_hz * dt) {
    blink_left_ = kBlink;
  }
  if (blink_left_ > 0.0) {
    const double phase = (kBlink - blink_left_ + 0.5 * dt) / kBlink;
    pose.blink = std::sin(std::numbers::pi * std::clamp(phase, 0.0, 1.0));
  }

  for (const auto& iv : smiles_) {
    pose.expression[static_cast<std::size_t>(EmotionLabel::Happiness)] =
        std::max(pose.expression[static_cast<std::size_t>(EmotionLabel::Happiness)], iv.amplitude * envelope(iv, t, 1.0));
  }
  for (const auto& iv : excursions_) {
    const double e = envelope(iv, t, 0.3);
    if (e == 0.0) continue;
    pose.yaw += iv.sign * iv.amplitude * d.head_turn_deg * e;
    pose.pitch -= 0.35 * iv.amplitude * d.head_turn_deg * e;
    pose.gaze_x += iv.gx * e;
    pose.gaze_y += iv.gy * e;
    Interval startle = iv;
    startle.end = std::min(iv.end, iv.start + 1.5);
    auto& s = pose.expression[static_cast<std::size_t>(EmotionLabel::Surprise)];
    s = std::max(s, 0.7 * envelope(startle, t, 0.3));
  }
  last_ = pose;

  const bool dropped = std::any_of(dropouts_.begin(), dropouts_.end(),
                                   [&](const Interval& iv) { return t >= iv.start && t < iv.end; });
  std::vector<Point3> pts = render_face(tmpl_, user_, pose);
  for (auto& p : pts) {
    p.x = round6(p.x + d.jitter * standard_normal(noise_rng_));
    p.y = round6(p.y + d.jitter * standard_normal(noise_rng_));
    p.z = round6(p.z + d.jitter * standard_normal(noise_rng_));
  }
  if (dropped) return LandmarkFrame::no_face(ts);
  return LandmarkFrame{ts, true, std::move(pts)};
}

std::vector<SessionEvent> generate_session(const SyntheticSessionSpec& spec, const CanonicalFaceTemplate& tmpl,
                                           std::ostream& out) {
  SessionGenerator gen(spec, tmpl);
  io::StreamWriter writer(out, gen.meta(), gen.events());
  while (auto f = gen.next()) writer.write(*f);
  return gen.events();
}

std::vector<emotion::LabeledLandmarkExample> surrogate_emotion_dataset(const CanonicalFaceTemplate& tmpl,
                                                                       std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 21));
  std::vector<emotion::LabeledLandmarkExample> out;
  constexpr std::size_t kClasses = kEmotionCount - 1;  // NoFace is never a face expression
  out.reserve(per_class * kClasses);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t label = 0; label < kClasses; ++label) {
      const UserProfile user = UserProfile::make(tmpl, rng());
      FacePose pose;
      pose.yaw = 4.0 * standard_normal(rng);
      pose.pitch = 3.0 * standard_normal(rng);
      pose.roll = 2.0 * standard_normal(rng);
      pose.gaze_x = 0.15 * standard_normal(rng);
      pose.gaze_y = 0.15 * standard_normal(rng);
      if (label != static_cast<std::size_t>(EmotionLabel::Neutral)) pose.expression[label] = uniform(rng, 0.6, 1.0);
      std::vector<Point3> pts = render_face(tmpl, user, pose);
      for (auto& p : pts) {
        p.x += 0.0008 * standard_normal(rng);
        p.y += 0.0008 * standard_normal(rng);
        p.z += 0.0008 * standard_normal(rng);
      }
      const LandmarkFrame frame{0, true, std::move(pts)};
      out.push_back({flatten(normalize_landmarks(frame, tmpl)), label});
    }
  }
  return out;
}

emotion::MlpModel train_surrogate_classifier(const CanonicalFaceTemplate& tmpl, std::uint64_t seed,
                                             double* train_accuracy) {
  auto data = surrogate_emotion_dataset(tmpl, 120, seed);
  const auto raw = data;

  // Train on standardized inputs, then fold the standardization into the first
  // layer so the returned model consumes raw normalized landmarks.
  const std::size_t dim = data.front().landmarks.size();
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (const auto& ex : data) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += ex.landmarks[j];
  }
  for (auto& m : mean) m /= static_cast<double>(data.size());
  for (const auto& ex : data) {
    for (std::size_t j = 0; j < dim; ++j) sd[j] += (ex.landmarks[j] - mean[j]) * (ex.landmarks[j] - mean[j]);
  }
  for (auto& s : sd) s = std::max(std::sqrt(s / static_cast<double>(data.size())), 1e-6);
  for (auto& ex : data) {
    for (std::size_t j = 0; j < dim; ++j) ex.landmarks[j] = (ex.landmarks[j] - mean[j]) / sd[j];
  }

  emotion::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.hidden_dim = 32;
  cfg.learning_rate = 0.05;
  cfg.seed = seed;
  emotion::MlpModel model = emotion::train(data, cfg).model;
  for (std::size_t h = 0; h < model.hidden_dim(); ++h) {
    double shift = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      model.w1(h, j) /= sd[j];
      shift += model.w1(h, j) * mean[j];
    }
    model.b1[h] -= shift;
  }
  model.version = "surrogate-" + std::to_string(seed);
  if (train_accuracy) *train_accuracy = emotion::accuracy(model, raw);
  return model;
}

}  // namespace focusplus::synth

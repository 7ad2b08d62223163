#pragma once

// Deterministic synthetic sessions (FS / DAS / MWS) over a canonical face
// template, plus the surrogate expression dataset used to fit the emotion
// classifier when no trained weights are supplied.
//
// All randomness comes from std::mt19937_64 (whose output sequence is fixed by
// the standard) through local uniform/normal transforms, so a seed produces
// byte-identical streams on every conforming platform.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "focusplus/emotion.hpp"
#include "focusplus/geometry.hpp"
#include "focusplus/types.hpp"

namespace focusplus::synth {

/// Tunable behaviour. Angles in degrees, gaze in eye half-widths, times in seconds.
struct Dynamics {
  // Focused baseline (all kinds).
  double head_sigma_deg = 1.5;  // stationary std of yaw; pitch 0.8x, roll 0.5x
  double head_tau_s = 2.0;
  double gaze_sigma = 0.08;
  double gaze_tau_s = 0.8;
  double jitter = 0.0008;  // per-coordinate landmark noise, image units
  double blink_rate_hz = 0.25;
  double expression_rate_hz = 1.0 / 90.0;  // mild smiles
  // Dropouts (face lost) for DAS and MWS; FS sessions never lose the face.
  double no_face_rate_hz = 0.01;
  double no_face_max_s = 1.0;
  // DAS notification excursions.
  double head_turn_deg = 25.0;
  double gaze_shift = 0.5;
  double excursion_min_s = 2.0;
  double excursion_max_s = 5.0;
  // MWS episodes.
  double gaze_drift = 0.45;
  double mw_motion_scale = 0.3;
  double mw_min_s = 30.0;
  double mw_max_s = 90.0;
};

struct SyntheticSessionSpec {
  SessionKind kind = SessionKind::FS;
  double duration_s = 600.0;
  double fps = 10.0;
  std::uint64_t seed = 1;
  std::uint64_t user_seed = 1;  // face shape and camera placement; share across one user's sessions
  std::vector<std::int64_t> notifications_ms;  // DAS only
  Dynamics dynamics;
  std::string session_id;  // empty -> derived from kind and seed
  std::string user_id;     // empty -> derived from user_seed
  std::string course_type = "lecture";
  std::string started_at = "2024-01-01T00:00:00Z";

  /// Defaults for `kind`; DAS gets one notification per minute at seeded jitter.
  static SyntheticSessionSpec defaults(SessionKind kind, std::uint64_t seed, std::uint64_t user_seed = 1);
  /// Throws InvalidSpec.
  void validate() const;
  std::size_t frame_count() const noexcept;
};

/// Seeded notification times: one per minute, jittered, clear of the session edges.
std::vector<std::int64_t> default_notification_schedule(double duration_s, std::uint64_t seed);

/// Per-user face shape and camera placement.
struct UserProfile {
  std::vector<Point3> face;  // template after per-user reshaping
  double cam_dx = 0.0;
  double cam_dy = 0.0;
  double cam_scale = 1.0;
  double yaw0 = 0.0;  // resting head pose towards the screen
  double pitch0 = 0.0;
  static UserProfile make(const CanonicalFaceTemplate& tmpl, std::uint64_t user_seed);
  static UserProfile neutral(const CanonicalFaceTemplate& tmpl);
};

/// Everything that shapes one rendered frame.
struct FacePose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double gaze_x = 0.0;  // conjugate iris shift towards image +x
  double gaze_y = 0.0;  // towards the upper lid
  double blink = 0.0;   // 0 open .. 1 closed
  std::array<double, kEmotionCount> expression{};  // intensity per label (Neutral / NoFace ignored)
};

/// Renders a face (noise-free) in image coordinates.
std::vector<Point3> render_face(const CanonicalFaceTemplate& tmpl, const UserProfile& user, const FacePose& pose);

/// Lazily produces the frames of one session; memory is independent of duration.
class SessionGenerator {
 public:
  SessionGenerator(SyntheticSessionSpec spec, const CanonicalFaceTemplate& tmpl);

  const SessionMeta& meta() const noexcept { return meta_; }
  /// Ground-truth distraction intervals (notification excursions / mind-wandering episodes).
  const std::vector<SessionEvent>& events() const noexcept { return events_; }
  std::size_t frame_count() const noexcept { return total_; }
  std::optional<LandmarkFrame> next();
  /// Pose parameters of the most recent frame (for tests).
  const FacePose& last_pose() const noexcept { return last_; }

 private:
  struct Interval {
    double start = 0.0;
    double end = 0.0;
    double sign = 1.0;
    double amplitude = 1.0;
    double gx = 0.0;
    double gy = 0.0;
  };
  static double envelope(const Interval& iv, double t, double ramp) noexcept;

  SyntheticSessionSpec spec_;
  const CanonicalFaceTemplate& tmpl_;
  UserProfile user_;
  SessionMeta meta_;
  std::vector<SessionEvent> events_;
  std::vector<Interval> excursions_;
  std::vector<Interval> wandering_;
  std::vector<Interval> smiles_;
  std::vector<Interval> dropouts_;
  std::mt19937_64 motion_rng_;
  std::mt19937_64 noise_rng_;
  std::size_t total_ = 0;
  std::size_t index_ = 0;
  double yaw_ = 0.0, pitch_ = 0.0, roll_ = 0.0, gx_ = 0.0, gy_ = 0.0;
  double blink_left_ = 0.0;  // seconds remaining in the current blink
  FacePose last_;
};

/// Generates the whole session into `out` as a landmark stream file.
std::vector<SessionEvent> generate_session(const SyntheticSessionSpec& spec, const CanonicalFaceTemplate& tmpl,
                                           std::ostream& out);

/// Labeled expressions (every label except NoFace), normalized and flattened,
/// under random users, poses and intensities.
std::vector<emotion::LabeledLandmarkExample> surrogate_emotion_dataset(const CanonicalFaceTemplate& tmpl,
                                                                       std::size_t per_class, std::uint64_t seed);

/// Trains the surrogate classifier used when no weights file is supplied.
emotion::MlpModel train_surrogate_classifier(const CanonicalFaceTemplate& tmpl, std::uint64_t seed,
                                             double* train_accuracy = nullptr);

double uniform01(std::mt19937_64& rng) noexcept;
double standard_normal(std::mt19937_64& rng) noexcept;

}  // namespace focusplus::synth

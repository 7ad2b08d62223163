#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace focusplus {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

/// One timestamped set of facemesh points, or an explicit no-face marker.
struct LandmarkFrame {
  std::int64_t timestamp_ms = 0;
  bool face_present = false;
  std::vector<Point3> points;

  static LandmarkFrame no_face(std::int64_t timestamp_ms) { return {timestamp_ms, false, {}}; }

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

/// Throws FrameCountMismatch / NonFiniteInput when the frame breaks its invariants.
void validate_frame(const LandmarkFrame& frame, std::size_t landmark_count);

enum class SessionKind : std::uint8_t { FS, DAS, MWS, LIVE };

std::string_view session_kind_name(SessionKind kind) noexcept;
SessionKind parse_session_kind(std::string_view text);

inline constexpr std::size_t kDefaultLandmarkCount = 478;

struct SessionMeta {
  std::string session_id;
  std::string user_id;
  std::string course_type = "lecture";
  SessionKind session_kind = SessionKind::LIVE;
  std::string started_at = "1970-01-01T00:00:00Z";
  std::size_t landmark_count = kDefaultLandmarkCount;

  friend bool operator==(const SessionMeta&, const SessionMeta&) = default;
};

// Fixed label order; used for classifier outputs, serialization and statistics.
enum class EmotionLabel : std::uint8_t {
  Neutral = 0,
  Happiness,
  Sadness,
  Surprise,
  Fear,
  Disgust,
  Anger,
  Contempt,
  None,
  Uncertain,
  NoFace,
};

inline constexpr std::size_t kEmotionCount = 11;

std::string_view emotion_name(EmotionLabel label) noexcept;
EmotionLabel parse_emotion(std::string_view text);

class EmotionDistribution {
 public:
  /// Validates non-negativity and that the probabilities sum to 1 within 1e-9.
  explicit EmotionDistribution(const std::array<double, kEmotionCount>& probabilities);

  static EmotionDistribution uniform();
  static EmotionDistribution certain(EmotionLabel label);

  const std::array<double, kEmotionCount>& probabilities() const noexcept { return p_; }
  double operator[](EmotionLabel label) const noexcept { return p_[static_cast<std::size_t>(label)]; }

  friend bool operator==(const EmotionDistribution&, const EmotionDistribution&) = default;

 private:
  std::array<double, kEmotionCount> p_;
};

/// Label of the largest probability; ties go to the lowest label index.
EmotionLabel argmax_emotion(const EmotionDistribution& dist) noexcept;

struct Gaze {
  double gx = 0.0;
  double gy = 0.0;
};

/// Degrees, intrinsic yaw (about y) -> pitch (about x) -> roll (about z).
struct HeadPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  bool gimbal_lock = false;
};

/// Everything that fixes the layout of a FeatureVector.
struct FeatureConfig {
  std::size_t landmark_count = kDefaultLandmarkCount;
  std::size_t pca_components = 16;
  std::vector<std::string> course_types{"lecture", "video", "exercise"};

  std::size_t dimension() const noexcept { return kEmotionCount + 2 + 3 + pca_components + course_types.size(); }
  /// Throws UnknownCourseType.
  std::size_t course_index(std::string_view course_type) const;
};

/// Concatenated one-class SVM input: emotion | gaze | head pose | PCA | course one-hot.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
};

FeatureVector assemble_feature_vector(const FeatureConfig& config, const EmotionDistribution& emotion, Gaze gaze,
                                      const HeadPose& pose, std::span<const double> pca_coeffs,
                                      const SessionMeta& meta);

/// The processed record that leaves the learner's machine. Holds no landmark data.
struct MetricPacket {
  std::string session_id;
  std::string user_id;
  std::int64_t timestamp_ms = 0;
  EmotionLabel emotion_label = EmotionLabel::Neutral;
  double anomaly_level = 0.0;
  bool face_present = true;

  friend bool operator==(const MetricPacket&, const MetricPacket&) = default;
};

/// Throws SchemaViolation.
void validate_packet(const MetricPacket& packet);

struct SessionEvent {
  std::int64_t timestamp_ms = 0;
  std::string kind;
  std::int64_t end_ms = 0;  // end of the ground-truth distraction interval, == timestamp when unknown

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct SessionRecord {
  SessionMeta meta;
  std::vector<MetricPacket> packets;
  std::vector<SessionEvent> events;
  std::optional<int> quiz_score;               // 0..10
  std::optional<int> self_report_distraction;  // 1..7
  std::optional<int> perceived_accuracy;       // 1..7

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Throws SchemaViolation on out-of-range quiz / Likert answers or unordered packets.
void validate_record(const SessionRecord& record);

/// Opaque identifiers are restricted to [A-Za-z0-9_.:-]+ so they survive the line-record format.
bool is_valid_identifier(std::string_view id) noexcept;

}  // namespace focusplus

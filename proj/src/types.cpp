#include "focusplus/types.hpp"

#include <algorithm>
#include <cmath>

#include "focusplus/error.hpp"

namespace focusplus {

namespace {

constexpr std::array<std::string_view, kEmotionCount> kEmotionNames{
    "Neutral", "Happiness", "Sadness", "Surprise", "Fear",      "Disgust",
    "Anger",   "Contempt",  "None",    "Uncertain", "No-Face"};

}  // namespace

void validate_frame(const LandmarkFrame& frame, std::size_t landmark_count) {
  if (frame.timestamp_ms < 0) {
    throw Error(ErrorCode::NonMonotoneTimestamp, "negative timestamp " + std::to_string(frame.timestamp_ms));
  }
  if (!frame.face_present) {
    if (!frame.points.empty()) {
      throw Error(ErrorCode::FrameCountMismatch, "no-face frame carries points");
    }
    return;
  }
  if (frame.points.size() != landmark_count) {
    throw Error(ErrorCode::FrameCountMismatch, "expected " + std::to_string(landmark_count) + " landmarks, got " +
                                                   std::to_string(frame.points.size()));
  }
  for (const auto& p : frame.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorCode::NonFiniteInput, "non-finite landmark coordinate");
    }
  }
}

std::string_view session_kind_name(SessionKind kind) noexcept {
  switch (kind) {
    case SessionKind::FS: return "FS";
    case SessionKind::DAS: return "DAS";
    case SessionKind::MWS: return "MWS";
    case SessionKind::LIVE: return "LIVE";
  }
  return "LIVE";
}

SessionKind parse_session_kind(std::string_view text) {
  if (text == "FS") return SessionKind::FS;
  if (text == "DAS") return SessionKind::DAS;
  if (text == "MWS") return SessionKind::MWS;
  if (text == "LIVE") return SessionKind::LIVE;
  throw Error(ErrorCode::InvalidArgument, "unknown session kind '" + std::string(text) + "'");
}

std::string_view emotion_name(EmotionLabel label) noexcept { return kEmotionNames[static_cast<std::size_t>(label)]; }

EmotionLabel parse_emotion(std::string_view text) {
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    if (kEmotionNames[i] == text) return static_cast<EmotionLabel>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown emotion label '" + std::string(text) + "'");
}

EmotionDistribution::EmotionDistribution(const std::array<double, kEmotionCount>& probabilities) : p_(probabilities) {
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "emotion probabilities must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "emotion probabilities sum to " + std::to_string(sum));
  }
}

EmotionDistribution EmotionDistribution::uniform() {
  std::array<double, kEmotionCount> p{};
  p.fill(1.0 / static_cast<double>(kEmotionCount));
  return EmotionDistribution(p);
}

EmotionDistribution EmotionDistribution::certain(EmotionLabel label) {
  std::array<double, kEmotionCount> p{};
  p[static_cast<std::size_t>(label)] = 1.0;
  return EmotionDistribution(p);
}

EmotionLabel argmax_emotion(const EmotionDistribution& dist) noexcept {
  const auto& p = dist.probabilities();
  // max_element returns the first maximum, which is the lowest index.
  return static_cast<EmotionLabel>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::size_t FeatureConfig::course_index(std::string_view course_type) const {
  auto it = std::find(course_types.begin(), course_types.end(), course_type);
  if (it == course_types.end()) {
    throw Error(ErrorCode::UnknownCourseType, "course type '" + std::string(course_type) + "' not in vocabulary");
  }
  return static_cast<std::size_t>(it - course_types.begin());
}

FeatureVector assemble_feature_vector(const FeatureConfig& config, const EmotionDistribution& emotion, Gaze gaze,
                                      const HeadPose& pose, std::span<const double> pca_coeffs,
                                      const SessionMeta& meta) {
  if (pca_coeffs.size() != config.pca_components) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(config.pca_components) +
                                                  " PCA coefficients, got " + std::to_string(pca_coeffs.size()));
  }
  const std::size_t course = config.course_index(meta.course_type);

  std::vector<double> v;
  v.reserve(config.dimension());
  v.insert(v.end(), emotion.probabilities().begin(), emotion.probabilities().end());
  v.push_back(gaze.gx);
  v.push_back(gaze.gy);
  v.push_back(pose.yaw);
  v.push_back(pose.pitch);
  v.push_back(pose.roll);
  v.insert(v.end(), pca_coeffs.begin(), pca_coeffs.end());
  for (std::size_t i = 0; i < config.course_types.size(); ++i) v.push_back(i == course ? 1.0 : 0.0);
  return FeatureVector(std::move(v));
}

bool is_valid_identifier(std::string_view id) noexcept {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
           c == ':' || c == '-';
  });
}

void validate_packet(const MetricPacket& packet) {
  if (!is_valid_identifier(packet.session_id) || !is_valid_identifier(packet.user_id)) {
    throw Error(ErrorCode::SchemaViolation, "invalid session or user identifier");
  }
  if (packet.timestamp_ms < 0) throw Error(ErrorCode::SchemaViolation, "negative timestamp");
  if (!(packet.anomaly_level >= 0.0 && packet.anomaly_level <= 1.0)) {
    throw Error(ErrorCode::SchemaViolation, "anomaly_level " + std::to_string(packet.anomaly_level) +
                                                " outside [0,1]");
  }
  if (static_cast<std::size_t>(packet.emotion_label) >= kEmotionCount) {
    throw Error(ErrorCode::SchemaViolation, "emotion label out of range");
  }
  if (!packet.face_present && packet.emotion_label != EmotionLabel::NoFace) {
    throw Error(ErrorCode::SchemaViolation, "no-face packet must carry the No-Face label");
  }
}

void validate_record(const SessionRecord& record) {
  if (record.quiz_score && (*record.quiz_score < 0 || *record.quiz_score > 10)) {
    throw Error(ErrorCode::SchemaViolation, "quiz score outside 0..10");
  }
  for (const auto& likert : {record.self_report_distraction, record.perceived_accuracy}) {
    if (likert && (*likert < 1 || *likert > 7)) throw Error(ErrorCode::SchemaViolation, "Likert answer outside 1..7");
  }
  std::int64_t last = -1;
  for (const auto& p : record.packets) {
    validate_packet(p);
    if (p.timestamp_ms < last) throw Error(ErrorCode::SchemaViolation, "packets not in timestamp order");
    last = p.timestamp_ms;
  }
}

}  // namespace focusplus

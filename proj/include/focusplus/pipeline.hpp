#pragma once

// End-to-end processing of landmark streams: geometry -> emotion -> PCA ->
// one-class SVM scoring, plus focus-window training.

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "focusplus/bundle.hpp"
#include "focusplus/geometry.hpp"

namespace focusplus {

using FrameSource = std::function<std::optional<LandmarkFrame>()>;

/// Geometry + emotion for a single frame. Stateless and safe to share.
class FrameAnalyzer {
 public:
  FrameAnalyzer(const CanonicalFaceTemplate& tmpl, std::shared_ptr<const emotion::MlpModel> classifier,
                std::optional<calibration::GazeMap> gaze_map = std::nullopt);
  /// Throws on invalid frames (FrameCountMismatch, NonFiniteInput, DegenerateFace, ...).
  anomaly::FrameObservation observe(const LandmarkFrame& frame) const;
  const CanonicalFaceTemplate& face_template() const noexcept { return tmpl_; }
  bool gaze_calibrated() const noexcept { return gaze_map_.has_value(); }

 private:
  const CanonicalFaceTemplate& tmpl_;
  std::shared_ptr<const emotion::MlpModel> classifier_;
  std::optional<calibration::GazeMap> gaze_map_;
};

struct PipelineConfig {
  FeatureConfig features;
  anomaly::FocusWindowConfig focus;
  double lambda = 0.2;
};

/// Reads frames until the focus window closes (or the source ends) and trains.
ModelBundle train_bundle(const FrameSource& source, const SessionMeta& meta, const FrameAnalyzer& analyzer,
                         const PipelineConfig& config);

struct FrameScore {
  std::int64_t timestamp_ms = 0;
  bool face_present = false;
  EmotionLabel emotion = EmotionLabel::NoFace;
  double raw_level = 1.0;
  double smoothed_level = 1.0;
};

/// Per-stream scorer; sequential over frames.
class SessionScorer {
 public:
  SessionScorer(const ModelBundle& bundle, const FrameAnalyzer& analyzer, SessionMeta meta);
  FrameScore process(const LandmarkFrame& frame);
  /// The privacy-preserving packet for a scored frame (no landmark data).
  MetricPacket packet(const FrameScore& score) const;
  const SessionMeta& meta() const noexcept { return meta_; }

 private:
  const ModelBundle& bundle_;
  const FrameAnalyzer& analyzer_;
  SessionMeta meta_;
  anomaly::AnomalyScorerState state_;
};

struct ScoredSession {
  SessionRecord record;
  std::vector<FrameScore> frames;
};

/// Scores a whole stream; packets carry the smoothed level.
ScoredSession score_stream(const FrameSource& source, const SessionMeta& meta, std::span<const SessionEvent> events,
                           const ModelBundle& bundle, const FrameAnalyzer& analyzer);

/// CSV: timestamp_ms,face_present,emotion,raw_level,smoothed_level
void write_focus_log(std::ostream& out, std::span<const FrameScore> frames);

}  // namespace focusplus

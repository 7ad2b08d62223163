#include "focusplus/pipeline.hpp"

#include <ostream>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus {

FrameAnalyzer::FrameAnalyzer(const CanonicalFaceTemplate& tmpl, std::shared_ptr<const emotion::MlpModel> classifier,
                             std::optional<calibration::GazeMap> gaze_map)
    : tmpl_(tmpl), classifier_(std::move(classifier)), gaze_map_(gaze_map) {
  if (!classifier_) throw Error(ErrorCode::ModelNotTrained, "no emotion classifier");
  if (classifier_->input_dim() != 3 * tmpl_.landmark_count()) {
    throw Error(ErrorCode::DimensionMismatch, "classifier input does not match the landmark template");
  }
}

anomaly::FrameObservation FrameAnalyzer::observe(const LandmarkFrame& frame) const {
  anomaly::FrameObservation obs;
  obs.timestamp_ms = frame.timestamp_ms;
  obs.face_present = frame.face_present;
  if (!frame.face_present) return obs;
  validate_frame(frame, tmpl_.landmark_count());
  obs.landmarks = flatten(normalize_landmarks(frame, tmpl_));
  obs.emotion = emotion::infer(*classifier_, obs.landmarks);
  obs.pose = estimate_head_pose(frame, tmpl_);
  obs.gaze = estimate_gaze(frame, tmpl_);
  if (gaze_map_) {
    const auto s = calibration::apply_gaze_map(*gaze_map_, obs.gaze);
    obs.gaze = {s.u, s.v};
  }
  return obs;
}

ModelBundle train_bundle(const FrameSource& source, const SessionMeta& meta, const FrameAnalyzer& analyzer,
                         const PipelineConfig& config) {
  anomaly::FocusWindowTrainer trainer(config.features, meta, config.focus);
  const auto window_end = static_cast<std::int64_t>(config.focus.window_seconds * 1000.0);
  while (auto frame = source()) {
    // frames past the window are not analyzed at all
    if (frame->timestamp_ms >= window_end) {
      anomaly::FrameObservation past;
      past.timestamp_ms = frame->timestamp_ms;
      trainer.add(past);
      break;
    }
    trainer.add(analyzer.observe(*frame));
  }
  anomaly::FocusWindowModel model = trainer.train();
  ModelBundle b;
  b.features = model.features;
  b.focus = model.config;
  b.lambda = config.lambda;
  b.stats = model.stats;
  b.pca = std::move(model.pca);
  b.detector = std::move(model.detector);
  return b;
}

SessionScorer::SessionScorer(const ModelBundle& bundle, const FrameAnalyzer& analyzer, SessionMeta meta)
    : bundle_(bundle), analyzer_(analyzer), meta_(std::move(meta)), state_(bundle.detector, bundle.lambda) {
  if (!bundle_.detector) throw Error(ErrorCode::ModelNotTrained, "bundle has no detector");
  bundle_.features.course_index(meta_.course_type);  // fail early on unknown course types
}

FrameScore SessionScorer::process(const LandmarkFrame& frame) {
  const anomaly::FrameObservation obs = analyzer_.observe(frame);
  FrameScore s;
  s.timestamp_ms = frame.timestamp_ms;
  s.face_present = obs.face_present;
  std::optional<FeatureVector> fv;
  if (obs.face_present) {
    fv = anomaly::observation_features(obs, bundle_.pca, bundle_.features, meta_);
    s.emotion = argmax_emotion(obs.emotion);
  }
  const auto levels = state_.score_frame(fv);
  s.raw_level = levels.raw;
  s.smoothed_level = levels.smoothed;
  return s;
}

MetricPacket SessionScorer::packet(const FrameScore& score) const {
  return {meta_.session_id, meta_.user_id, score.timestamp_ms, score.emotion, score.smoothed_level, score.face_present};
}

ScoredSession score_stream(const FrameSource& source, const SessionMeta& meta, std::span<const SessionEvent> events,
                           const ModelBundle& bundle, const FrameAnalyzer& analyzer) {
  SessionScorer scorer(bundle, analyzer, meta);
  ScoredSession out;
  out.record.meta = meta;
  out.record.events.assign(events.begin(), events.end());
  while (auto frame = source()) {
    const FrameScore s = scorer.process(*frame);
    out.record.packets.push_back(scorer.packet(s));
    out.frames.push_back(s);
  }
  return out;
}

void write_focus_log(std::ostream& out, std::span<const FrameScore> frames) {
  out << "timestamp_ms,face_present,emotion,raw_level,smoothed_level\n";
  for (const auto& f : frames) {
    out << f.timestamp_ms << ',' << (f.face_present ? 1 : 0) << ',' << emotion_name(f.emotion) << ','
        << format_double(f.raw_level) << ',' << format_double(f.smoothed_level) << '\n';
  }
}

}  // namespace focusplus

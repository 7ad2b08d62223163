#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "focusplus/ocsvm.hpp"
#include "focusplus/pca.hpp"
#include "focusplus/types.hpp"

namespace focusplus::anomaly {

/// Per-frame output of geometry + emotion, before dimensionality reduction.
struct FrameObservation {
  std::int64_t timestamp_ms = 0;
  bool face_present = false;
  EmotionDistribution emotion = EmotionDistribution::certain(EmotionLabel::NoFace);
  Gaze gaze;
  HeadPose pose;
  std::vector<double> landmarks;  // normalized, flattened; empty without a face
};

/// Per-dimension standardization fitted on the focus window. Dimensions whose
/// spread is below 1e-6 are only centered.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const Matrix& samples);
  static FeatureScaler identity(std::size_t dim);
  std::vector<double> apply(std::span<const double> x) const;
  bool empty() const noexcept { return mean.empty(); }

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

/// Scaler + one-class SVM: what the scorer evaluates per frame.
struct Detector {
  FeatureScaler scaler;
  OneClassSvmModel svm;

  double decision(const FeatureVector& fv) const;
  double level(const FeatureVector& fv) const;

  friend bool operator==(const Detector&, const Detector&) = default;
};

/// Exponentially smoothed anomaly level for one session stream.
class AnomalyScorerState {
 public:
  struct Levels {
    double raw = 0.0;
    double smoothed = 0.0;
  };

  explicit AnomalyScorerState(double lambda = 0.2);
  AnomalyScorerState(std::shared_ptr<const Detector> detector, double lambda = 0.2);

  /// NoFace frames (nullopt) score raw 1.0. Throws ModelNotTrained.
  Levels score_frame(const std::optional<FeatureVector>& fv);
  /// The smoothing step alone: first value initializes, then lambda*raw + (1-lambda)*previous.
  Levels push_raw(double raw);

  bool has_model() const noexcept { return detector_ != nullptr; }
  double ewma() const noexcept { return ewma_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t frames_seen() const noexcept { return frames_seen_; }

 private:
  std::shared_ptr<const Detector> detector_;
  double lambda_;
  double ewma_ = 0.0;
  std::size_t frames_seen_ = 0;
};

/// min(1, max(|yaw|, |pitch|) / threshold). Throws InvalidArgument for threshold <= 0.
double baseline_face_direction_score(const HeadPose& pose, double threshold_deg);

enum class GammaPolicy { MedianHeuristic, Fixed };

struct FocusWindowConfig {
  double window_seconds = 600.0;
  std::size_t min_frames = 300;
  double nu = 0.1;
  KernelSpec::Type kernel = KernelSpec::Type::Rbf;
  GammaPolicy gamma_policy = GammaPolicy::MedianHeuristic;
  double fixed_gamma = 0.0;
  bool standardize = true;
};

/// 1 / (d * median pairwise squared distance), median floored at 1e-9, result floored at 1e-9.
double median_heuristic_gamma(const Matrix& sq_dist, std::size_t dim);

struct FocusWindowStats {
  std::size_t frames_in_window = 0;
  std::size_t usable_frames = 0;
  std::size_t no_face_frames = 0;
  double no_face_fraction() const noexcept {
    return frames_in_window == 0 ? 0.0 : static_cast<double>(no_face_frames) / static_cast<double>(frames_in_window);
  }
};

struct FocusWindowModel {
  FeatureConfig features;
  FocusWindowConfig config;
  pca::PcaModel pca;
  std::shared_ptr<const Detector> detector;
  FocusWindowStats stats;
};

/// Collects the focus window frame by frame, then fits PCA and the one-class SVM.
class FocusWindowTrainer {
 public:
  FocusWindowTrainer(FeatureConfig features, SessionMeta meta, FocusWindowConfig config);

  /// Returns false (and ignores the frame) once frames lie beyond the window.
  bool add(const FrameObservation& obs);
  /// Set by the first frame at or past the window end.
  bool window_complete() const noexcept { return complete_; }
  const FocusWindowStats& stats() const noexcept { return stats_; }

  /// Throws InsufficientTrainingFrames if fewer than min_frames usable frames were collected.
  FocusWindowModel train() const;

 private:
  FeatureConfig features_;
  SessionMeta meta_;
  FocusWindowConfig config_;
  FocusWindowStats stats_;
  std::vector<FrameObservation> usable_;
  bool complete_ = false;
};

FocusWindowModel focus_window_train(std::span<const FrameObservation> stream, const SessionMeta& meta,
                                    const FeatureConfig& features, const FocusWindowConfig& config);

/// FeatureVector for one face-present observation under a trained PCA.
FeatureVector observation_features(const FrameObservation& obs, const pca::PcaModel& pca, const FeatureConfig& features,
                                   const SessionMeta& meta);

}  // namespace focusplus::anomaly

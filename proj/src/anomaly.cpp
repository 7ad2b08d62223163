#include "focusplus/anomaly.hpp"

#include <algorithm>
#include <cmath>

#include "focusplus/error.hpp"
#include "focusplus/kernels.hpp"

namespace focusplus::anomaly {

FeatureScaler FeatureScaler::fit(const Matrix& samples) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  FeatureScaler s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += samples(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = samples(i, j) - s.mean[j];
      var += e * e;
    }
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    s.scale[j] = sd < 1e-6 ? 1.0 : sd;
  }
  return s;
}

FeatureScaler FeatureScaler::identity(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

std::vector<double> FeatureScaler::apply(std::span<const double> x) const {
  if (empty()) return {x.begin(), x.end()};
  if (x.size() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "scaler dimension");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
  return out;
}

double Detector::decision(const FeatureVector& fv) const { return decision_value(svm, scaler.apply(fv.values())); }

double Detector::level(const FeatureVector& fv) const { return level_from_decision(decision(fv), svm.score_scale); }

AnomalyScorerState::AnomalyScorerState(double lambda) : AnomalyScorerState(nullptr, lambda) {}

AnomalyScorerState::AnomalyScorerState(std::shared_ptr<const Detector> detector, double lambda)
    : detector_(std::move(detector)), lambda_(lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "smoothing factor must lie in (0, 1]");
}

AnomalyScorerState::Levels AnomalyScorerState::push_raw(double raw) {
  raw = std::clamp(raw, 0.0, 1.0);
  ewma_ = frames_seen_ == 0 ? raw : lambda_ * raw + (1.0 - lambda_) * ewma_;
  ++frames_seen_;
  return {raw, ewma_};
}

AnomalyScorerState::Levels AnomalyScorerState::score_frame(const std::optional<FeatureVector>& fv) {
  if (!detector_) throw Error(ErrorCode::ModelNotTrained, "no anomaly model loaded");
  return push_raw(fv ? detector_->level(*fv) : 1.0);
}

double baseline_face_direction_score(const HeadPose& pose, double threshold_deg) {
  if (!(threshold_deg > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be positive");
  const double deviation = std::max(std::abs(pose.yaw), std::abs(pose.pitch));
  return std::min(1.0, deviation / threshold_deg);
}

double median_heuristic_gamma(const Matrix& sq_dist, std::size_t dim) {
  const std::size_t n = sq_dist.rows();
  std::vector<double> upper;
  upper.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) upper.push_back(sq_dist(i, j));
  double median = 0.0;
  if (!upper.empty()) {
    const std::size_t mid = upper.size() / 2;
    std::nth_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(mid), upper.end());
    median = upper[mid];
    if (upper.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
  }
  median = std::max(median, 1e-9);
  return std::max(1.0 / (static_cast<double>(std::max<std::size_t>(dim, 1)) * median), 1e-9);
}

FeatureVector observation_features(const FrameObservation& obs, const pca::PcaModel& pca, const FeatureConfig& features,
                                   const SessionMeta& meta) {
  if (!obs.face_present) throw Error(ErrorCode::NoFace, "no features for a no-face frame");
  const std::vector<double> coeffs = pca::transform(pca, obs.landmarks);
  return assemble_feature_vector(features, obs.emotion, obs.gaze, obs.pose, coeffs, meta);
}

FocusWindowTrainer::FocusWindowTrainer(FeatureConfig features, SessionMeta meta, FocusWindowConfig config)
    : features_(std::move(features)), meta_(std::move(meta)), config_(config) {
  if (!(config_.window_seconds > 0.0)) throw Error(ErrorCode::InvalidArgument, "window_seconds must be positive");
  if (!(config_.nu > 0.0 && config_.nu <= 1.0)) throw Error(ErrorCode::InfeasibleNu, "nu must lie in (0, 1]");
  features_.course_index(meta_.course_type);
}

bool FocusWindowTrainer::add(const FrameObservation& obs) {
  if (complete_) return false;
  if (static_cast<double>(obs.timestamp_ms) >= config_.window_seconds * 1000.0) {
    complete_ = true;
    return false;
  }
  ++stats_.frames_in_window;
  if (!obs.face_present) {
    ++stats_.no_face_frames;
    return true;
  }
  ++stats_.usable_frames;
  usable_.push_back(obs);
  return true;
}

FocusWindowModel FocusWindowTrainer::train() const {
  const std::size_t n = usable_.size();
  if (n < std::max<std::size_t>(config_.min_frames, 2) || n <= features_.pca_components) {
    throw Error(ErrorCode::InsufficientTrainingFrames,
                std::to_string(n) + " usable frames in the focus window, need " + std::to_string(config_.min_frames));
  }
  FocusWindowModel out;
  out.features = features_;
  out.config = config_;
  out.stats = stats_;

  const std::size_t d_in = usable_.front().landmarks.size();
  Matrix landmarks(n, d_in);
  for (std::size_t i = 0; i < n; ++i) {
    if (usable_[i].landmarks.size() != d_in) throw Error(ErrorCode::DimensionMismatch, "landmark vector length");
    std::copy(usable_[i].landmarks.begin(), usable_[i].landmarks.end(), landmarks.row(i).begin());
  }
  out.pca = pca::fit(landmarks, features_.pca_components);

  const std::size_t dim = features_.dimension();
  Matrix raw(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureVector fv = observation_features(usable_[i], out.pca, features_, meta_);
    std::copy(fv.values().begin(), fv.values().end(), raw.row(i).begin());
  }

  auto detector = std::make_shared<Detector>();
  detector->scaler = config_.standardize ? FeatureScaler::fit(raw) : FeatureScaler{};
  Matrix scaled(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = detector->scaler.apply(raw.row(i));
    std::copy(s.begin(), s.end(), scaled.row(i).begin());
  }

  KernelSpec kernel{config_.kernel, 1.0};
  Matrix gram;
  if (kernel.type == KernelSpec::Type::Linear) {
    kernels::omp::gram(scaled, kernel, gram);
  } else {
    kernels::omp::pairwise_sq_dist(scaled, gram);
    kernel.gamma = config_.gamma_policy == GammaPolicy::Fixed ? config_.fixed_gamma : median_heuristic_gamma(gram, dim);
    if (!(kernel.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
    for (auto& v : gram.data()) v = std::exp(-kernel.gamma * v);
  }
  detector->svm = train_ocsvm_with_gram(scaled, gram, config_.nu, kernel);
  out.detector = std::move(detector);
  return out;
}

FocusWindowModel focus_window_train(std::span<const FrameObservation> stream, const SessionMeta& meta,
                                    const FeatureConfig& features, const FocusWindowConfig& config) {
  FocusWindowTrainer trainer(features, meta, config);
  for (const auto& obs : stream) {
    if (!trainer.add(obs) && trainer.window_complete()) break;
  }
  return trainer.train();
}

}  // namespace focusplus::anomaly

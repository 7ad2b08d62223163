#pragma once

// A trained model bundle: everything needed to score a stream. Text container
// made of length-prefixed sections so each embedded model keeps its own format:
//
//   FPBUNDLE 1
//   features landmarks=<n> k=<k> courses=<a,b,c>
//   focus window=<s> min_frames=<n> nu=<r> kernel=rbf|linear gamma_policy=median|fixed fixed_gamma=<r> standardize=0|1 lambda=<r>
//   stats frames=<n> usable=<n> no_face=<n>
//   section <name> bytes=<n>       name in {emotion, pca, scaler, ocsvm, gazemap}
//   <n bytes>
//   ...
//   end

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "focusplus/anomaly.hpp"
#include "focusplus/calibration.hpp"
#include "focusplus/emotion.hpp"

namespace focusplus {

inline constexpr int kBundleVersion = 1;

struct ModelBundle {
  FeatureConfig features;
  anomaly::FocusWindowConfig focus;
  double lambda = 0.2;
  anomaly::FocusWindowStats stats;
  pca::PcaModel pca;
  std::shared_ptr<const anomaly::Detector> detector;
  std::shared_ptr<const emotion::MlpModel> emotion;
  std::optional<calibration::GazeMap> gaze_map;
};

void write_scaler(const anomaly::FeatureScaler& scaler, std::ostream& out);
anomaly::FeatureScaler read_scaler(std::istream& in);

void write_bundle(const ModelBundle& bundle, std::ostream& out);
/// Throws MalformedHeader / FormatVersionMismatch / MalformedRecord and whatever
/// the embedded model readers raise (e.g. CorruptWeights).
ModelBundle read_bundle(std::istream& in);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace focusplus

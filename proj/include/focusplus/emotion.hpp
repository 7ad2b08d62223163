#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "focusplus/linalg.hpp"
#include "focusplus/types.hpp"

namespace focusplus::emotion {

inline constexpr std::size_t kOutputs = kEmotionCount;
inline constexpr int kWeightsFormatVersion = 1;

/// One hidden tanh layer followed by a softmax over the 11 emotion labels.
struct MlpModel {
  Matrix w1;                // hidden x input
  std::vector<double> b1;   // hidden
  Matrix w2;                // 11 x hidden
  std::vector<double> b2;   // 11
  std::string version = "mlp-tanh-softmax";

  static MlpModel zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// Glorot-uniform weights, zero biases; deterministic for a given seed.
  static MlpModel random(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return w1.cols(); }
  std::size_t hidden_dim() const noexcept { return w1.rows(); }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct LabeledLandmarkExample {
  std::vector<double> landmarks;  // normalized, flattened
  std::size_t label = 0;
};

/// Throws DimensionMismatch / NonFiniteInput.
EmotionDistribution infer(const MlpModel& model, std::span<const double> landmarks);

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::size_t hidden_dim = 64;
};

struct TrainResult {
  MlpModel model;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;  // full-dataset mean cross-entropy after each epoch
};

/// Mini-batch gradient descent on mean cross-entropy. Single-threaded and
/// bitwise reproducible for a fixed seed.
TrainResult train(std::span<const LabeledLandmarkExample> examples, const TrainConfig& config);
/// Continues training from an existing model (same mechanics as train()).
TrainResult train_from(MlpModel start, std::span<const LabeledLandmarkExample> examples, const TrainConfig& config);

struct Gradient {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

/// Mean cross-entropy over the batch; fills `grad` (same shapes as the model) when non-null.
double loss_and_gradient(const MlpModel& model, std::span<const LabeledLandmarkExample> batch, Gradient* grad);

double accuracy(const MlpModel& model, std::span<const LabeledLandmarkExample> examples);

/// Text container:
///
///   FPMLP <version>
///   dims <input> <hidden> <outputs>
///   tag <version string>
///   w1 <hidden lines of <input> hex floats>
///   b1 / w2 / b2 likewise
///   checksum <16 hex digits>      FNV-1a 64 over every byte before this line
void save_weights(const MlpModel& model, std::ostream& out);
/// Throws FormatVersionMismatch or CorruptWeights.
MlpModel load_weights(std::istream& in);
std::uint64_t weights_checksum(std::string_view payload) noexcept;

}  // namespace focusplus::emotion

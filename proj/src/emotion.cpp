#include "focusplus/emotion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "focusplus/error.hpp"

namespace focusplus::emotion {

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void validate_examples(std::span<const LabeledLandmarkExample> examples, std::size_t input_dim) {
  if (examples.empty()) throw Error(ErrorCode::EmptyDataset, "no training examples");
  for (const auto& ex : examples) {
    if (ex.landmarks.size() != input_dim) {
      throw Error(ErrorCode::DimensionMismatch, "example has " + std::to_string(ex.landmarks.size()) +
                                                    " values, model expects " + std::to_string(input_dim));
    }
    if (ex.label >= kOutputs) throw Error(ErrorCode::InvalidArgument, "label out of range");
  }
}

struct Forward {
  std::vector<double> hidden;  // tanh activations
  std::array<double, kOutputs> prob{};
};

void forward(const MlpModel& m, std::span<const double> x, Forward& f) {
  const std::size_t h = m.hidden_dim();
  f.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) f.hidden[j] = std::tanh(dot(m.w1.row(j), x) + m.b1[j]);
  std::array<double, kOutputs> z{};
  for (std::size_t k = 0; k < kOutputs; ++k) z[k] = dot(m.w2.row(k), f.hidden) + m.b2[k];
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < kOutputs; ++k) {
    f.prob[k] = std::exp(z[k] - zmax);
    sum += f.prob[k];
  }
  for (auto& p : f.prob) p /= sum;
}

Gradient zero_gradient(const MlpModel& m) {
  return {Matrix(m.hidden_dim(), m.input_dim()), std::vector<double>(m.hidden_dim()), Matrix(kOutputs, m.hidden_dim()),
          std::vector<double>(kOutputs)};
}

std::string hex(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

double unhex(std::string_view s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error(ErrorCode::CorruptWeights, "bad weight value");
  return v;
}

}  // namespace

MlpModel MlpModel::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  MlpModel m;
  m.w1 = Matrix(hidden_dim, input_dim);
  m.b1.assign(hidden_dim, 0.0);
  m.w2 = Matrix(kOutputs, hidden_dim);
  m.b2.assign(kOutputs, 0.0);
  return m;
}

MlpModel MlpModel::random(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
  MlpModel m = zeros(input_dim, hidden_dim);
  std::mt19937_64 rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  for (auto& w : m.w1.data()) w = a1 * (2.0 * unit_uniform(rng) - 1.0);
  const double a2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + kOutputs));
  for (auto& w : m.w2.data()) w = a2 * (2.0 * unit_uniform(rng) - 1.0);
  return m;
}

EmotionDistribution infer(const MlpModel& model, std::span<const double> landmarks) {
  if (landmarks.size() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "classifier expects " + std::to_string(model.input_dim()) +
                                                  " inputs, got " + std::to_string(landmarks.size()));
  }
  if (!std::all_of(landmarks.begin(), landmarks.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::NonFiniteInput, "non-finite classifier input");
  }
  Forward f;
  forward(model, landmarks, f);
  return EmotionDistribution(f.prob);
}

double loss_and_gradient(const MlpModel& m, std::span<const LabeledLandmarkExample> batch, Gradient* grad) {
  if (grad) *grad = zero_gradient(m);
  const std::size_t h = m.hidden_dim();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Forward f;
  std::vector<double> dhidden(h);
  double loss = 0.0;
  for (const auto& ex : batch) {
    forward(m, ex.landmarks, f);
    loss -= std::log(std::max(f.prob[ex.label], 1e-300));
    if (!grad) continue;
    // softmax + cross-entropy: dL/dz = p - onehot
    std::array<double, kOutputs> dz = f.prob;
    dz[ex.label] -= 1.0;
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t k = 0; k < kOutputs; ++k) {
      const double g = dz[k] * inv_n;
      grad->b2[k] += g;
      auto gw = grad->w2.row(k);
      auto w = m.w2.row(k);
      for (std::size_t j = 0; j < h; ++j) {
        gw[j] += g * f.hidden[j];
        dhidden[j] += dz[k] * w[j];
      }
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double g = dhidden[j] * (1.0 - f.hidden[j] * f.hidden[j]) * inv_n;
      if (g == 0.0) continue;
      grad->b1[j] += g;
      auto gw = grad->w1.row(j);
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += g * ex.landmarks[i];
    }
  }
  return loss * inv_n;
}

double accuracy(const MlpModel& model, std::span<const LabeledLandmarkExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    if (static_cast<std::size_t>(argmax_emotion(infer(model, ex.landmarks))) == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

TrainResult train_from(MlpModel model, std::span<const LabeledLandmarkExample> examples, const TrainConfig& config) {
  validate_examples(examples, model.input_dim());
  if (config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "batch size and learning rate must be positive");
  }
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledLandmarkExample> batch;
  Gradient g;

  TrainResult result;
  result.epoch_losses.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      loss_and_gradient(model, batch, &g);
      const double lr = config.learning_rate;
      for (std::size_t i = 0; i < g.w1.data().size(); ++i) model.w1.data()[i] -= lr * g.w1.data()[i];
      for (std::size_t i = 0; i < g.b1.size(); ++i) model.b1[i] -= lr * g.b1[i];
      for (std::size_t i = 0; i < g.w2.data().size(); ++i) model.w2.data()[i] -= lr * g.w2.data()[i];
      for (std::size_t i = 0; i < g.b2.size(); ++i) model.b2[i] -= lr * g.b2[i];
    }
    result.epoch_losses.push_back(loss_and_gradient(model, examples, nullptr));
  }
  result.final_loss = result.epoch_losses.empty() ? loss_and_gradient(model, examples, nullptr)
                                                  : result.epoch_losses.back();
  result.model = std::move(model);
  return result;
}

TrainResult train(std::span<const LabeledLandmarkExample> examples, const TrainConfig& config) {
  if (examples.empty()) throw Error(ErrorCode::EmptyDataset, "no training examples");
  return train_from(MlpModel::random(examples.front().landmarks.size(), config.hidden_dim, config.seed), examples,
                    config);
}

std::uint64_t weights_checksum(std::string_view payload) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_weights(const MlpModel& model, std::ostream& out) {
  std::ostringstream body;
  body << "FPMLP " << kWeightsFormatVersion << '\n'
       << "dims " << model.input_dim() << ' ' << model.hidden_dim() << ' ' << kOutputs << '\n'
       << "tag " << model.version << '\n';
  auto write_matrix = [&](const char* name, const Matrix& m) {
    body << name << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) body << (c ? " " : "") << hex(row[c]);
      body << '\n';
    }
  };
  auto write_vector = [&](const char* name, const std::vector<double>& v) {
    body << name << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) body << (i ? " " : "") << hex(v[i]);
    body << '\n';
  };
  write_matrix("w1", model.w1);
  write_vector("b1", model.b1);
  write_matrix("w2", model.w2);
  write_vector("b2", model.b2);
  const std::string payload = body.str();
  char sum[17];
  std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(weights_checksum(payload)));
  out << payload << "checksum " << sum << '\n';
}

MlpModel load_weights(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.rfind("FPMLP ", 0) != 0) throw Error(ErrorCode::CorruptWeights, "missing weights magic");
  {
    std::istringstream first(text.substr(6, text.find('\n') - 6));
    int version = 0;
    if (!(first >> version)) throw Error(ErrorCode::CorruptWeights, "unreadable format version");
    if (version != kWeightsFormatVersion) {
      throw Error(ErrorCode::FormatVersionMismatch, "weights format version " + std::to_string(version));
    }
  }
  const std::size_t cpos = text.rfind("checksum ");
  if (cpos == std::string::npos || (cpos > 0 && text[cpos - 1] != '\n')) {
    throw Error(ErrorCode::CorruptWeights, "missing checksum (truncated file?)");
  }
  const std::string payload = text.substr(0, cpos);
  const std::string stored = text.substr(cpos + 9, 16);
  char expect[17];
  std::snprintf(expect, sizeof expect, "%016llx", static_cast<unsigned long long>(weights_checksum(payload)));
  if (stored != expect) throw Error(ErrorCode::CorruptWeights, "checksum mismatch");

  std::istringstream body(payload);
  std::string line, word;
  std::getline(body, line);  // magic
  std::size_t in_dim = 0, hidden = 0, outputs = 0;
  if (!std::getline(body, line) || !(std::istringstream(line) >> word >> in_dim >> hidden >> outputs) || word != "dims") {
    throw Error(ErrorCode::CorruptWeights, "bad dims line");
  }
  if (outputs != kOutputs || in_dim == 0 || hidden == 0) throw Error(ErrorCode::CorruptWeights, "bad layer sizes");
  MlpModel m = MlpModel::zeros(in_dim, hidden);
  if (!std::getline(body, line) || line.rfind("tag ", 0) != 0) throw Error(ErrorCode::CorruptWeights, "missing tag");
  m.version = line.substr(4);

  auto read_rows = [&](const char* name, std::size_t rows, std::size_t cols, std::span<double> dst) {
    if (!std::getline(body, line) || line != name) {
      throw Error(ErrorCode::CorruptWeights, std::string("expected section ") + name);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(body, line)) throw Error(ErrorCode::CorruptWeights, std::string("short section ") + name);
      std::istringstream ls(line);
      std::size_t c = 0;
      while (ls >> word) {
        if (c >= cols) throw Error(ErrorCode::CorruptWeights, std::string("row too long in ") + name);
        const double v = unhex(word);
        if (!std::isfinite(v)) throw Error(ErrorCode::CorruptWeights, "non-finite weight");
        dst[r * cols + c++] = v;
      }
      if (c != cols) throw Error(ErrorCode::CorruptWeights, std::string("row shape mismatch in ") + name);
    }
  };
  read_rows("w1", hidden, in_dim, m.w1.data());
  read_rows("b1", 1, hidden, m.b1);
  read_rows("w2", kOutputs, hidden, m.w2.data());
  read_rows("b2", 1, kOutputs, m.b2);
  if (std::getline(body, line) && !line.empty()) throw Error(ErrorCode::CorruptWeights, "trailing data in weights");
  return m;
}

}  // namespace focusplus::emotion

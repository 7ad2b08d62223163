#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "expect.hpp"
#include "focusplus/anomaly.hpp"
#include "oracles.hpp"

using namespace focusplus;
using namespace focusplus::anomaly;
using oracle::thrown;

namespace {

Matrix gram_of(const Matrix& x, const KernelSpec& k) {
  Matrix g(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.rows(); ++j) g(i, j) = k(x.row(i), x.row(j));
  return g;
}

// Re-expands a model's sparse alphas onto the training rows (support vectors are copied rows).
std::vector<double> dense_alphas(const OneClassSvmModel& m, const Matrix& x) {
  std::vector<double> a(x.rows(), 0.0);
  std::vector<bool> used(x.rows(), false);
  for (std::size_t s = 0; s < m.alphas.size(); ++s)
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (!used[i] && std::equal(x.row(i).begin(), x.row(i).end(), m.support_vectors.row(s).begin())) {
        a[i] = m.alphas[s];
        used[i] = true;
        break;
      }
  return a;
}

void check_feasible(const OneClassSvmModel& m) {
  const double c = 1.0 / (m.nu * static_cast<double>(m.training_count));
  double sum = 0.0;
  for (double a : m.alphas) {
    CHECK(a > 1e-12);
    CHECK(a <= c + 1e-12);
    sum += a;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

anomaly::FrameObservation observation(std::int64_t t, std::mt19937_64& rng, double shift) {
  std::normal_distribution<double> n(0.0, 1.0);
  anomaly::FrameObservation o;
  o.timestamp_ms = t;
  o.face_present = true;
  o.emotion = EmotionDistribution::certain(EmotionLabel::Neutral);
  o.gaze = {0.05 * n(rng) + 0.3 * shift, 0.05 * n(rng)};
  o.pose = {2.0 * n(rng) + 20.0 * shift, 1.5 * n(rng), 1.0 * n(rng), false};
  for (int i = 0; i < 12; ++i) o.landmarks.push_back(0.1 * i + 0.01 * n(rng) + 0.05 * shift * (i % 2));
  return o;
}

SessionMeta meta() {
  SessionMeta m;
  m.session_id = "s";
  m.user_id = "u";
  m.landmark_count = 4;
  return m;
}

}  // namespace

TEST_CASE("single sample, nu = 1: alpha = 1, rho = K(x,x) = 1, f(x) = 0") {
  Matrix x(1, 3);
  x(0, 0) = 0.2;
  x(0, 1) = -1.0;
  x(0, 2) = 4.0;
  const auto m = train_ocsvm(x, 1.0, {KernelSpec::Type::Rbf, 0.5});
  REQUIRE(m.alphas.size() == 1);
  CHECK(m.alphas[0] == 1.0);
  CHECK(std::abs(m.rho - 1.0) < 1e-12);
  CHECK(std::abs(decision_value(m, x.row(0))) < 1e-9);
}

TEST_CASE("four 2-D points, linear kernel, nu = 0.5 match both QP oracles") {
  Matrix x(4, 2);
  const double pts[4][2] = {{1.0, 0.2}, {0.3, 1.1}, {2.0, 1.7}, {1.4, 0.9}};
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = pts[i][0];
    x(i, 1) = pts[i][1];
  }
  const KernelSpec lin{KernelSpec::Type::Linear, 0.0};
  const Matrix q = gram_of(x, lin);
  const auto sol = solve_one_class_dual(q, 0.5);
  const auto exact = oracle::one_class_dual_exact(q, 0.5);
  const auto projected = oracle::one_class_dual_projected(q, 0.5);
  REQUIRE(exact.found);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(sol.alpha[i] - exact.alpha[i]) < 1e-4);
    CHECK(std::abs(sol.alpha[i] - projected.alpha[i]) < 1e-4);
  }
  CHECK(std::abs(sol.rho - exact.rho) < 1e-4);
  CHECK(std::abs(sol.objective - exact.objective) < 1e-8);
  CHECK(std::abs(projected.objective - exact.objective) < 1e-8);

  const auto model = train_ocsvm(x, 0.5, lin);
  check_feasible(model);
  CHECK(std::abs(model.rho - exact.rho) < 1e-4);
}

TEST_CASE("SMO matches the exact QP oracle on random small instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t l = 1 + rng() % 6;
    const std::size_t d = 1 + rng() % 3;
    const Matrix x = oracle::random_matrix(l, d, rng);
    const double nu = std::max(1.0 / static_cast<double>(l), u(rng));
    const KernelSpec k{KernelSpec::Type::Rbf, 0.1 + 1.9 * u(rng)};
    const Matrix q = gram_of(x, k);
    const auto exact = oracle::one_class_dual_exact(q, 1.0 / (nu * static_cast<double>(l)));
    REQUIRE(exact.found);
    const auto sol = solve_one_class_dual(q, nu);
    for (std::size_t i = 0; i < l; ++i) CHECK(std::abs(sol.alpha[i] - exact.alpha[i]) < 1e-4);
    CHECK(std::abs(sol.rho - exact.rho) < 1e-4);
    CHECK(std::abs(sol.objective - exact.objective) < 1e-8);
    const auto m = train_ocsvm(x, nu, k);
    check_feasible(m);
    const auto dense = dense_alphas(m, x);
    for (std::size_t i = 0; i < l; ++i) CHECK(std::abs(dense[i] - exact.alpha[i]) < 1e-4);
  }
}

TEST_CASE("nu-property on 500 Gaussian samples") {
  for (double nu : {0.05, 0.1, 0.3}) {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(seed);
      const Matrix x = oracle::random_matrix(500, 2, rng);
      Matrix sq;
      kernels::serial::pairwise_sq_dist(x, sq);
      const auto m = train_ocsvm(x, nu, {KernelSpec::Type::Rbf, median_heuristic_gamma(sq, 2)});
      check_feasible(m);
      std::size_t outliers = 0;
      for (std::size_t i = 0; i < 500; ++i)
        if (decision_value(m, x.row(i)) < 0.0) ++outliers;
      const double out_frac = static_cast<double>(outliers) / 500.0;
      const double sv_frac = static_cast<double>(m.alphas.size()) / 500.0;
      if (out_frac <= nu + 0.03 && sv_frac >= nu - 0.03) ++ok;
      // The asymptotic bounds with the 3/sqrt(l) slack hold for every fit.
      CHECK(out_frac <= nu + 3.0 / std::sqrt(500.0));
      CHECK(sv_frac >= nu - 3.0 / std::sqrt(500.0));
    }
    CHECK(ok >= 9);
  }
}

TEST_CASE("decision values: naive double loop agreement and far-field limit") {
  std::mt19937_64 rng(5);
  const Matrix x = oracle::random_matrix(60, 4, rng);
  const KernelSpec k{KernelSpec::Type::Rbf, 0.4};
  const auto m = train_ocsvm(x, 0.2, k);
  const Matrix probes = oracle::random_matrix(30, 4, rng, 2.0);
  for (std::size_t p = 0; p < probes.rows(); ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.alphas.size(); ++i) {
      double d = 0.0;
      for (std::size_t c = 0; c < 4; ++c) {
        const double e = m.support_vectors(i, c) - probes(p, c);
        d += e * e;
      }
      s += m.alphas[i] * std::exp(-0.4 * d);
    }
    CHECK(decision_value(m, probes.row(p)) == s - m.rho);
  }
  const std::vector<double> far{1e3, -1e3, 1e3, 1e3};
  CHECK(decision_value(m, far) == -m.rho);
  CHECK(thrown([&] { decision_value(m, std::vector<double>(3, 0.0)); }) == "DimensionMismatch");
}

TEST_CASE("anomaly level mapping") {
  CHECK(level_from_decision(0.0, 0.7) == 0.5);
  CHECK(std::abs(level_from_decision(0.7, 0.7) - 0.2689414) < 1e-6);
  CHECK(level_from_decision(1e6, 1.0) < 1e-12);
  CHECK(level_from_decision(-1e6, 1.0) > 1.0 - 1e-12);
  double previous = 1.0;
  for (double f = -5.0; f <= 5.0; f += 0.01) {
    const double level = level_from_decision(f, 0.3);
    CHECK(level <= previous);
    CHECK((level > 0.5) == (f < 0.0));
    previous = level;
  }
}

TEST_CASE("EWMA smoothing recurrence") {
  AnomalyScorerState s(0.2);
  CHECK(s.push_raw(0.3).smoothed == 0.3);
  AnomalyScorerState one(1.0);
  for (double r : {0.1, 0.9, 0.4}) CHECK(one.push_raw(r).smoothed == r);
  AnomalyScorerState half(0.5);
  CHECK(half.push_raw(0.2).smoothed == 0.2);
  CHECK(std::abs(half.push_raw(1.0).smoothed - 0.6) < 1e-15);
  CHECK(thrown([] { AnomalyScorerState bad(0.0); }) == "InvalidArgument");
}

TEST_CASE("score_frame: no-face frames score 1, untrained state is an error") {
  AnomalyScorerState untrained;
  CHECK(thrown([&] { untrained.score_frame(std::nullopt); }) == "ModelNotTrained");

  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(50, 3, rng);
  auto det = std::make_shared<Detector>();
  det->scaler = FeatureScaler::fit(x);
  Matrix scaled(50, 3);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto s = det->scaler.apply(x.row(i));
    std::copy(s.begin(), s.end(), scaled.row(i).begin());
  }
  det->svm = train_ocsvm(scaled, 0.1, {KernelSpec::Type::Rbf, 0.3});
  AnomalyScorerState state(det, 0.2);
  CHECK(state.score_frame(std::nullopt).raw == 1.0);
  for (int i = 0; i < 100; ++i) {
    const Matrix p = oracle::random_matrix(1, 3, rng, 5.0);
    const auto lv = state.score_frame(FeatureVector({p(0, 0), p(0, 1), p(0, 2)}));
    CHECK(lv.raw >= 0.0);
    CHECK(lv.raw <= 1.0);
    CHECK(lv.smoothed >= 0.0);
    CHECK(lv.smoothed <= 1.0);
  }
  CHECK(state.frames_seen() == 101);
}

TEST_CASE("face-direction baseline") {
  CHECK(baseline_face_direction_score({0, 0, 0, false}, 30) == 0.0);
  CHECK(baseline_face_direction_score({30, 0, 0, false}, 30) == 1.0);
  CHECK(baseline_face_direction_score({15, 0, 0, false}, 30) == 0.5);
  CHECK(baseline_face_direction_score({5, -45, 0, false}, 30) == 1.0);
  CHECK(thrown([] { baseline_face_direction_score({}, 0.0); }) == "InvalidArgument");
}

TEST_CASE("training errors") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(10, 2, rng);
  const KernelSpec k{KernelSpec::Type::Rbf, 1.0};
  CHECK(thrown([&] { train_ocsvm(x, 0.05, k); }) == "InfeasibleNu");
  CHECK(thrown([&] { train_ocsvm(x, 0.0, k); }) == "InfeasibleNu");
  CHECK(thrown([&] { train_ocsvm(x, 1.5, k); }) == "InfeasibleNu");
  Matrix bad = x;
  bad(3, 1) = std::numeric_limits<double>::infinity();
  CHECK(thrown([&] { train_ocsvm(bad, 0.5, k); }) == "NonFiniteFeature");
  const Matrix big = oracle::random_matrix(200, 2, rng);
  SolverOptions capped;
  capped.iterations_per_sample = 0;
  CHECK(thrown([&] { train_ocsvm(big, 0.3, k, capped); }) == "NonConvergence");
}

TEST_CASE("median heuristic gamma") {
  Matrix sq(3, 3);
  sq(0, 1) = sq(1, 0) = 1.0;
  sq(0, 2) = sq(2, 0) = 4.0;
  sq(1, 2) = sq(2, 1) = 9.0;
  CHECK(median_heuristic_gamma(sq, 2) == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
  CHECK(median_heuristic_gamma(Matrix(4, 4), 3) == doctest::Approx(1.0 / 3e-9));
}

TEST_CASE("model serialization is exact") {
  std::mt19937_64 rng(8);
  const auto m = train_ocsvm(oracle::random_matrix(40, 3, rng), 0.25, {KernelSpec::Type::Rbf, 0.123});
  std::stringstream ss;
  write_model(m, ss);
  CHECK(read_model(ss) == m);
}

TEST_CASE("focus window uses exactly the frames inside the window") {
  std::mt19937_64 rng(4);
  std::vector<anomaly::FrameObservation> stream;
  for (std::int64_t t = 0; t < 1200000; t += 100) stream.push_back(observation(t, rng, 0.0));
  FeatureConfig features;
  features.pca_components = 4;
  features.landmark_count = 4;
  FocusWindowConfig cfg;
  cfg.window_seconds = 600;
  const auto model = focus_window_train(stream, meta(), features, cfg);
  CHECK(model.stats.frames_in_window == 6000);
  CHECK(model.stats.usable_frames == 6000);
  CHECK(model.detector->svm.training_count == 6000);
  check_feasible(model.detector->svm);
}

TEST_CASE("focus window: no-face frames excluded, too few usable frames is an error") {
  std::vector<anomaly::FrameObservation> stream;
  for (std::int64_t t = 0; t < 700000; t += 100) {
    anomaly::FrameObservation o;
    o.timestamp_ms = t;
    stream.push_back(o);
  }
  FeatureConfig features;
  features.pca_components = 4;
  CHECK(thrown([&] { focus_window_train(stream, meta(), features, {}); }) == "InsufficientTrainingFrames");
  FocusWindowTrainer trainer(features, meta(), {});
  for (const auto& o : stream) trainer.add(o);
  CHECK(trainer.window_complete());
  CHECK(trainer.stats().no_face_fraction() == 1.0);
}

TEST_CASE("frames after the window that leave the training distribution score higher") {
  std::mt19937_64 rng(6);
  std::vector<anomaly::FrameObservation> window, later;
  for (std::int64_t t = 0; t < 60000; t += 100) window.push_back(observation(t, rng, 0.0));
  for (std::int64_t t = 60000; t < 90000; t += 100) later.push_back(observation(t, rng, 1.0));
  FeatureConfig features;
  features.pca_components = 4;
  FocusWindowConfig cfg;
  cfg.window_seconds = 60;
  const auto model = focus_window_train(window, meta(), features, cfg);
  auto mean_level = [&](const std::vector<anomaly::FrameObservation>& obs) {
    double s = 0.0;
    for (const auto& o : obs) s += model.detector->level(observation_features(o, model.pca, features, meta()));
    return s / static_cast<double>(obs.size());
  };
  const double inside = mean_level(window), outside = mean_level(later);
  CHECK(outside > inside);
  CHECK(inside < 0.5);
}

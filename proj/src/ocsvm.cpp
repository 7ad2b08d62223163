#include "focusplus/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus::anomaly {

namespace {

constexpr double kTau = 1e-12;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

void check_nu(double nu, std::size_t n) {
  if (!(nu > 0.0 && nu <= 1.0)) throw Error(ErrorCode::InfeasibleNu, "nu must lie in (0, 1], got " + std::to_string(nu));
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "one-class SVM needs at least one sample");
  if (nu * static_cast<double>(n) < 1.0 - 1e-12) {
    throw Error(ErrorCode::InfeasibleNu, "nu*n = " + std::to_string(nu * static_cast<double>(n)) + " < 1");
  }
}

}  // namespace

DualSolution solve_one_class_dual(const Matrix& q, double nu, const SolverOptions& options) {
  const std::size_t n = q.rows();
  check_nu(nu, n);
  const double c = 1.0 / (nu * static_cast<double>(n));

  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  // Fill the first floor(1/c) variables to the bound, the remainder goes to the next one.
  double remaining = 1.0;
  for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
    sol.alpha[i] = std::min(c, remaining);
    remaining -= sol.alpha[i];
    if (remaining < 1e-15) remaining = 0.0;
  }

  std::vector<double>& g = sol.gradient;
  g.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] == 0.0) continue;
    auto qi = q.row(i);
    for (std::size_t t = 0; t < n; ++t) g[t] += sol.alpha[i] * qi[t];
  }

  const std::size_t cap = std::max<std::size_t>(1, options.iterations_per_sample * n);
  auto is_upper = [&](std::size_t t) { return sol.alpha[t] >= c; };
  auto is_lower = [&](std::size_t t) { return sol.alpha[t] <= 0.0; };

  for (;;) {
    // i: most violating variable that can still increase.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!is_upper(t) && -g[t] > gmax) {
        gmax = -g[t];
        i = t;
      }
    }
    // j: second-order choice among variables that can decrease.
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (is_lower(t)) continue;
      gmax2 = std::max(gmax2, g[t]);
      if (i == n) continue;
      const double diff = gmax + g[t];
      if (diff > 0.0) {
        double quad = q(i, i) + q(t, t) - 2.0 * q(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -diff * diff / quad;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    sol.max_violation = (i == n || gmax2 == -std::numeric_limits<double>::infinity()) ? 0.0 : gmax + gmax2;
    if (sol.max_violation < options.tolerance || j == n) break;
    if (sol.iterations >= cap) {
      throw Error(ErrorCode::NonConvergence, "SMO stopped after " + std::to_string(sol.iterations) +
                                                 " iterations with KKT violation " + std::to_string(sol.max_violation));
    }
    ++sol.iterations;

    const double old_i = sol.alpha[i];
    const double old_j = sol.alpha[j];
    double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
    if (quad <= 0.0) quad = kTau;
    const double delta = (g[i] - g[j]) / quad;
    const double sum = old_i + old_j;
    double ai = old_i - delta;
    double aj = old_j + delta;
    if (sum > c) {
      if (ai > c) {
        ai = c;
        aj = sum - c;
      }
    } else if (aj < 0.0) {
      aj = 0.0;
      ai = sum;
    }
    if (sum > c) {
      if (aj > c) {
        aj = c;
        ai = sum - c;
      }
    } else if (ai < 0.0) {
      ai = 0.0;
      aj = sum;
    }
    sol.alpha[i] = ai;
    sol.alpha[j] = aj;

    const double di = ai - old_i;
    const double dj = aj - old_j;
    auto qi = q.row(i);
    auto qj = q.row(j);
    for (std::size_t t = 0; t < n; ++t) g[t] += qi[t] * di + qj[t] * dj;
  }

  // Fresh gradient: the incremental one accumulates rounding over many updates.
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] == 0.0) continue;
    auto qi = q.row(i);
    for (std::size_t t = 0; t < n; ++t) g[t] += sol.alpha[i] * qi[t];
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double a = sol.alpha[t];
    if (a > kTau && a < c - kTau) {
      free_sum += g[t];
      ++free_count;
    } else if (a >= c - kTau) {
      lb = std::max(lb, g[t]);
    } else {
      ub = std::min(ub, g[t]);
    }
  }
  if (free_count > 0) {
    sol.rho = free_sum / static_cast<double>(free_count);
  } else if (std::isinf(ub)) {
    sol.rho = lb;
  } else if (std::isinf(lb)) {
    sol.rho = ub;
  } else {
    sol.rho = 0.5 * (ub + lb);
  }
  sol.objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) sol.objective += 0.5 * sol.alpha[t] * g[t];
  return sol;
}

OneClassSvmModel train_ocsvm_with_gram(const Matrix& samples, const Matrix& gram, double nu, const KernelSpec& kernel,
                                       const SolverOptions& options) {
  const std::size_t n = samples.rows();
  check_nu(nu, n);
  if (gram.rows() != n || gram.cols() != n) throw Error(ErrorCode::DimensionMismatch, "Gram matrix shape");
  for (double v : samples.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "non-finite training feature");
  }
  const DualSolution sol = solve_one_class_dual(gram, nu, options);

  OneClassSvmModel model;
  model.kernel = kernel;
  model.nu = nu;
  model.rho = sol.rho;
  model.training_count = n;
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > 1e-12) sv.push_back(i);
  }
  model.support_vectors = Matrix(sv.size(), samples.cols());
  for (std::size_t r = 0; r < sv.size(); ++r) {
    std::copy(samples.row(sv[r]).begin(), samples.row(sv[r]).end(), model.support_vectors.row(r).begin());
    model.alphas.push_back(sol.alpha[sv[r]]);
  }
  std::vector<double> margins(n);
  for (std::size_t i = 0; i < n; ++i) margins[i] = std::abs(sol.gradient[i] - sol.rho);
  model.score_scale = std::max(median_of(std::move(margins)), 1e-6);
  return model;
}

OneClassSvmModel train_ocsvm(const Matrix& samples, double nu, const KernelSpec& kernel, const SolverOptions& options) {
  check_nu(nu, samples.rows());
  for (double v : samples.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "non-finite training feature");
  }
  Matrix gram;
  kernels::omp::gram(samples, kernel, gram);
  return train_ocsvm_with_gram(samples, gram, nu, kernel, options);
}

double decision_value(const OneClassSvmModel& model, std::span<const double> x) {
  if (x.size() != model.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.dimension()) +
                                                  " features, got " + std::to_string(x.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < model.alphas.size(); ++i) s += model.alphas[i] * model.kernel(model.support_vectors.row(i), x);
  return s - model.rho;
}

double level_from_decision(double decision, double score_scale) noexcept {
  return 1.0 / (1.0 + std::exp(decision / score_scale));
}

double anomaly_level(const OneClassSvmModel& model, std::span<const double> x) {
  return level_from_decision(decision_value(model, x), model.score_scale);
}

void write_model(const OneClassSvmModel& m, std::ostream& out) {
  out << "ocsvm kernel=" << (m.kernel.type == KernelSpec::Type::Rbf ? "rbf" : "linear")
      << " gamma=" << format_double(m.kernel.gamma) << " nu=" << format_double(m.nu) << " rho=" << format_double(m.rho)
      << " scale=" << format_double(m.score_scale) << " trained=" << m.training_count
      << " sv=" << m.support_vectors.rows() << " dim=" << m.support_vectors.cols() << '\n';
  for (std::size_t r = 0; r < m.support_vectors.rows(); ++r) {
    out << "sv " << format_double(m.alphas[r]);
    for (double v : m.support_vectors.row(r)) out << ' ' << format_double(v);
    out << '\n';
  }
}

OneClassSvmModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "missing ocsvm header");
  RecordLine head = RecordLine::parse(line);
  if (head.tag != "ocsvm") throw Error(ErrorCode::MalformedRecord, "expected ocsvm header");
  OneClassSvmModel m;
  const std::string& kernel = head.at("kernel");
  if (kernel != "rbf" && kernel != "linear") throw Error(ErrorCode::MalformedRecord, "unknown kernel " + kernel);
  m.kernel.type = kernel == "rbf" ? KernelSpec::Type::Rbf : KernelSpec::Type::Linear;
  m.kernel.gamma = parse_double(head.at("gamma"));
  m.nu = parse_double(head.at("nu"));
  m.rho = parse_double(head.at("rho"));
  m.score_scale = parse_double(head.at("scale"));
  m.training_count = static_cast<std::size_t>(parse_int(head.at("trained")));
  const auto nsv = static_cast<std::size_t>(parse_int(head.at("sv")));
  const auto dim = static_cast<std::size_t>(parse_int(head.at("dim")));
  m.support_vectors = Matrix(nsv, dim);
  for (std::size_t r = 0; r < nsv; ++r) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "truncated support vectors");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != "sv") throw Error(ErrorCode::MalformedRecord, "expected sv record");
    if (!(ls >> word)) throw Error(ErrorCode::MalformedRecord, "sv record lacks alpha");
    m.alphas.push_back(parse_double(word));
    std::size_t c = 0;
    while (ls >> word) {
      if (c >= dim) throw Error(ErrorCode::MalformedRecord, "sv record too long");
      m.support_vectors(r, c++) = parse_double(word);
    }
    if (c != dim) throw Error(ErrorCode::MalformedRecord, "sv record too short");
  }
  return m;
}

}  // namespace focusplus::anomaly

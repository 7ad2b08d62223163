#include "focusplus/pca.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "focusplus/error.hpp"
#include "focusplus/kernels.hpp"
#include "focusplus/records.hpp"

namespace focusplus::pca {

namespace {

void fix_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

// Modified Gram-Schmidt on the rows; a collapsed row is replaced by a fresh
// coordinate direction so the basis keeps full rank.
void orthonormalize_rows(Matrix& b) {
  for (std::size_t r = 0; r < b.rows(); ++r) {
    auto row = b.row(r);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t q = 0; q < r; ++q) {
        const double proj = dot(row, b.row(q));
        auto qrow = b.row(q);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] -= proj * qrow[i];
      }
    }
    double norm = std::sqrt(dot(row, row));
    if (norm < 1e-300) {
      std::fill(row.begin(), row.end(), 0.0);
      row[r % row.size()] = 1.0;
      norm = 1.0;
    }
    for (auto& x : row) x /= norm;
  }
}

struct Eigenpairs {
  std::vector<double> values;
  Matrix vectors;  // rows
};

Eigenpairs dense_top(const Matrix& cov, std::size_t k, const FitOptions& opt) {
  SymmetricEigen eig = jacobi_eigen(cov, opt.tolerance, opt.max_sweeps);
  if (!eig.converged) throw Error(ErrorCode::NonConvergence, "Jacobi eigen-decomposition did not converge");
  Eigenpairs out;
  out.values.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(k));
  out.vectors = Matrix(k, cov.cols());
  for (std::size_t r = 0; r < k; ++r) std::copy(eig.vectors.row(r).begin(), eig.vectors.row(r).end(), out.vectors.row(r).begin());
  return out;
}

// Block subspace iteration with Rayleigh-Ritz (Jacobi on the small projected
// matrix). Converges to the top-k invariant subspace at rate lambda_{p+1}/lambda_k.
Eigenpairs subspace_top(const Matrix& cov, std::size_t k, const FitOptions& opt) {
  const std::size_t d = cov.cols();
  const std::size_t p = std::min(d, 2 * k + 8);
  Matrix basis(p, d);
  std::mt19937_64 rng(0x5eed5eedULL);
  for (auto& x : basis.data()) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  orthonormalize_rows(basis);

  const int max_iter = std::max(opt.max_sweeps, 1);
  Matrix product, ritz(p, d);
  std::vector<double> values;
  for (int iter = 0; iter < max_iter; ++iter) {
    kernels::omp::rows_times_symmetric(basis, cov, product);  // p x d, rows = C b_r
    // Rayleigh-Ritz: H = B C B^T
    Matrix h(p, p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) h(i, j) = h(j, i) = dot(basis.row(i), product.row(j));
    SymmetricEigen small = jacobi_eigen(h, 1e-14, 200);
    // ritz vectors = Y^T B, and C * ritz = Y^T (C B)
    ritz = small.vectors * basis;
    Matrix cr = small.vectors * product;
    values = small.values;

    double worst = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      double res = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double e = cr(r, i) - values[r] * ritz(r, i);
        res += e * e;
      }
      worst = std::max(worst, std::sqrt(res));
    }
    if (worst <= 1e-10 * std::max(values.front(), 1e-300)) break;
    basis = std::move(cr);
    orthonormalize_rows(basis);
  }
  Eigenpairs out;
  out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
  out.vectors = Matrix(k, d);
  for (std::size_t r = 0; r < k; ++r) std::copy(ritz.row(r).begin(), ritz.row(r).end(), out.vectors.row(r).begin());
  orthonormalize_rows(out.vectors);
  return out;
}

}  // namespace

PcaModel fit(const Matrix& samples, std::size_t k, const FitOptions& options) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 2) throw Error(ErrorCode::InsufficientSamples, "PCA needs at least 2 samples");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw Error(ErrorCode::InsufficientSamples, "k=" + std::to_string(k) + " exceeds min(n-1, d)=" +
                                                    std::to_string(std::min(n - 1, d)));
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = samples.row(i);
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
  }
  for (auto& m : model.mean) m /= static_cast<double>(n);

  Matrix centered = samples;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] -= model.mean[j];
  }
  Matrix cov;
  kernels::omp::covariance(centered, static_cast<double>(n - 1), cov);
  double total_variance = 0.0;
  for (std::size_t j = 0; j < d; ++j) total_variance += cov(j, j);

  Eigenpairs top = d <= options.dense_limit || k * 4 >= d ? dense_top(cov, k, options) : subspace_top(cov, k, options);

  const double largest = top.values.front();
  if (!(largest > 0.0) || top.values.back() < 1e-12 * largest) {
    throw Error(ErrorCode::RankDeficient, "k=" + std::to_string(k) + " exceeds the numerical rank of the data");
  }
  model.components = std::move(top.vectors);
  for (std::size_t r = 0; r < k; ++r) fix_sign(model.components.row(r));
  model.explained_variance = top.values;
  for (double v : top.values) model.explained_variance_ratio.push_back(v / total_variance);
  return model;
}

std::vector<double> transform(const PcaModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "PCA expects " + std::to_string(model.input_dim()) + " inputs, got " +
                                                  std::to_string(x.size()));
  }
  std::vector<double> y(model.k(), 0.0);
  for (std::size_t r = 0; r < model.k(); ++r) {
    auto c = model.components.row(r);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += c[i] * (x[i] - model.mean[i]);
    y[r] = s;
  }
  return y;
}

std::vector<double> inverse_transform(const PcaModel& model, std::span<const double> y) {
  if (y.size() != model.k()) {
    throw Error(ErrorCode::DimensionMismatch, "PCA inverse expects " + std::to_string(model.k()) + " coefficients");
  }
  std::vector<double> x = model.mean;
  for (std::size_t r = 0; r < model.k(); ++r) {
    auto c = model.components.row(r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[r] * c[i];
  }
  return x;
}

void write_model(const PcaModel& model, std::ostream& out) {
  auto line = [&](const char* tag, std::span<const double> v) {
    out << tag;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  };
  out << "pca " << model.k() << ' ' << model.input_dim() << '\n';
  line("mean", model.mean);
  line("variance", model.explained_variance);
  line("ratio", model.explained_variance_ratio);
  for (std::size_t r = 0; r < model.k(); ++r) line("component", model.components.row(r));
}

PcaModel read_model(std::istream& in) {
  std::string line, tag;
  std::size_t k = 0, d = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> tag >> k >> d) || tag != "pca") {
    throw Error(ErrorCode::MalformedRecord, "bad pca header");
  }
  auto read = [&](const char* expect, std::size_t count) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "truncated pca block");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != expect) throw Error(ErrorCode::MalformedRecord, std::string("expected pca ") + expect);
    std::vector<double> v;
    while (ls >> word) v.push_back(parse_double(word));
    if (v.size() != count) throw Error(ErrorCode::MalformedRecord, std::string("pca ") + expect + " has wrong length");
    return v;
  };
  PcaModel m;
  m.mean = read("mean", d);
  m.explained_variance = read("variance", k);
  m.explained_variance_ratio = read("ratio", k);
  m.components = Matrix(k, d);
  for (std::size_t r = 0; r < k; ++r) {
    auto v = read("component", d);
    std::copy(v.begin(), v.end(), m.components.row(r).begin());
  }
  return m;
}

}  // namespace focusplus::pca

#include "focusplus/kernels.hpp"

#include <cmath>
#include <cstdint>

#include "focusplus/error.hpp"

namespace focusplus {

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const noexcept {
  if (type == Type::Linear) return dot(a, b);
  return std::exp(-gamma * squared_distance(a, b));
}

namespace kernels {

namespace {

void check_decision_shapes(const Matrix& sv, std::span<const double> coef, const Matrix& queries,
                           std::span<double> out) {
  if (coef.size() != sv.rows() || out.size() != queries.rows() || (sv.rows() > 0 && sv.cols() != queries.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "decision_values shape mismatch");
  }
}

// One row of the upper triangle; the lower triangle is mirrored afterwards.
inline void sq_dist_row(const Matrix& x, Matrix& out, std::size_t i) {
  out(i, i) = 0.0;
  auto xi = x.row(i);
  for (std::size_t j = i + 1; j < x.rows(); ++j) out(i, j) = squared_distance(xi, x.row(j));
}

inline void gram_row(const Matrix& x, const KernelSpec& k, Matrix& out, std::size_t i) {
  auto xi = x.row(i);
  for (std::size_t j = i; j < x.rows(); ++j) out(i, j) = k(xi, x.row(j));
}

inline void mirror_upper(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) m(j, i) = m(i, j);
}

inline double decision_one(const Matrix& sv, std::span<const double> coef, const KernelSpec& k, double offset,
                           std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < sv.rows(); ++i) s += coef[i] * k(sv.row(i), q);
  return s - offset;
}


inline void basis_row(const Matrix& basis, const Matrix& sym, Matrix& out, std::size_t r) {
  auto br = basis.row(r);
  auto orow = out.row(r);
  for (std::size_t c = 0; c < sym.cols(); ++c) orow[c] = 0.0;
  for (std::size_t k = 0; k < sym.rows(); ++k) {
    const double w = br[k];
    if (w == 0.0) continue;
    auto srow = sym.row(k);
    for (std::size_t c = 0; c < sym.cols(); ++c) orow[c] += w * srow[c];
  }
}

// Covariance columns are accessed with stride d; transposing first keeps the
// inner loop contiguous for the large landmark matrices.
Matrix transpose_for_covariance(const Matrix& x) { return x.transposed(); }

inline void covariance_row_t(const Matrix& xt, double divisor, Matrix& out, std::size_t a) {
  auto ra = xt.row(a);
  for (std::size_t b = a; b < xt.rows(); ++b) out(a, b) = dot(ra, xt.row(b)) / divisor;
}

}  // namespace

namespace serial {

void pairwise_sq_dist(const Matrix& x, Matrix& out) {
  out = Matrix(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) sq_dist_row(x, out, i);
  mirror_upper(out);
}

void gram(const Matrix& x, const KernelSpec& kernel, Matrix& out) {
  out = Matrix(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) gram_row(x, kernel, out, i);
  mirror_upper(out);
}

void decision_values(const Matrix& sv, std::span<const double> coef, const KernelSpec& kernel, double offset,
                     const Matrix& queries, std::span<double> out) {
  check_decision_shapes(sv, coef, queries, out);
  for (std::size_t q = 0; q < queries.rows(); ++q) out[q] = decision_one(sv, coef, kernel, offset, queries.row(q));
}

void covariance(const Matrix& x, double divisor, Matrix& out) {
  out = Matrix(x.cols(), x.cols());
  const Matrix xt = transpose_for_covariance(x);
  for (std::size_t a = 0; a < x.cols(); ++a) covariance_row_t(xt, divisor, out, a);
  mirror_upper(out);
}

void rows_times_symmetric(const Matrix& basis, const Matrix& sym, Matrix& out) {
  if (basis.cols() != sym.rows()) throw Error(ErrorCode::DimensionMismatch, "rows_times_symmetric shapes");
  out = Matrix(basis.rows(), sym.cols());
  for (std::size_t r = 0; r < basis.rows(); ++r) basis_row(basis, sym, out, r);
}

}  // namespace serial

namespace omp {

void pairwise_sq_dist(const Matrix& x, Matrix& out) {
  out = Matrix(x.rows(), x.rows());
  const auto n = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) sq_dist_row(x, out, static_cast<std::size_t>(i));
  mirror_upper(out);
}

void gram(const Matrix& x, const KernelSpec& kernel, Matrix& out) {
  out = Matrix(x.rows(), x.rows());
  const auto n = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) gram_row(x, kernel, out, static_cast<std::size_t>(i));
  mirror_upper(out);
}

void decision_values(const Matrix& sv, std::span<const double> coef, const KernelSpec& kernel, double offset,
                     const Matrix& queries, std::span<double> out) {
  check_decision_shapes(sv, coef, queries, out);
  const auto nq = static_cast<std::int64_t>(queries.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < nq; ++q) {
    out[static_cast<std::size_t>(q)] = decision_one(sv, coef, kernel, offset, queries.row(static_cast<std::size_t>(q)));
  }
}

void covariance(const Matrix& x, double divisor, Matrix& out) {
  out = Matrix(x.cols(), x.cols());
  const Matrix xt = transpose_for_covariance(x);
  const auto d = static_cast<std::int64_t>(x.cols());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t a = 0; a < d; ++a) covariance_row_t(xt, divisor, out, static_cast<std::size_t>(a));
  mirror_upper(out);
}

void rows_times_symmetric(const Matrix& basis, const Matrix& sym, Matrix& out) {
  if (basis.cols() != sym.rows()) throw Error(ErrorCode::DimensionMismatch, "rows_times_symmetric shapes");
  out = Matrix(basis.rows(), sym.cols());
  const auto r = static_cast<std::int64_t>(basis.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < r; ++i) basis_row(basis, sym, out, static_cast<std::size_t>(i));
}

}  // namespace omp

}  // namespace kernels
}  // namespace focusplus

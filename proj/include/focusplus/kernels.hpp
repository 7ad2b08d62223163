#pragma once

// Data-parallel hot loops. Each kernel exists twice with the same signature:
// `serial::` is the reference used by the tests, `omp::` distributes rows over
// OpenMP threads. Both accumulate every output element in the same order, so
// their results are bitwise identical.

#include <span>

#include "focusplus/linalg.hpp"

namespace focusplus {

struct KernelSpec {
  enum class Type { Rbf, Linear };
  Type type = Type::Rbf;
  double gamma = 1.0;

  double operator()(std::span<const double> a, std::span<const double> b) const noexcept;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

namespace kernels {

namespace serial {

/// out(i,j) = |x_i - x_j|^2 over the rows of x.
void pairwise_sq_dist(const Matrix& x, Matrix& out);
/// Gram matrix K(x_i, x_j) over the rows of x.
void gram(const Matrix& x, const KernelSpec& kernel, Matrix& out);
/// out[q] = sum_i coef[i] * K(sv_i, query_q) - offset.
void decision_values(const Matrix& sv, std::span<const double> coef, const KernelSpec& kernel, double offset,
                     const Matrix& queries, std::span<double> out);
/// out = (x^T x) / divisor for a (centered) sample matrix x.
void covariance(const Matrix& x, double divisor, Matrix& out);
/// out = basis * sym for a symmetric sym (rows of basis times sym).
void rows_times_symmetric(const Matrix& basis, const Matrix& sym, Matrix& out);

}  // namespace serial

namespace omp {

void pairwise_sq_dist(const Matrix& x, Matrix& out);
void gram(const Matrix& x, const KernelSpec& kernel, Matrix& out);
void decision_values(const Matrix& sv, std::span<const double> coef, const KernelSpec& kernel, double offset,
                     const Matrix& queries, std::span<double> out);
void covariance(const Matrix& x, double divisor, Matrix& out);
void rows_times_symmetric(const Matrix& basis, const Matrix& sym, Matrix& out);

}  // namespace omp

}  // namespace kernels
}  // namespace focusplus

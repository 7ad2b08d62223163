#include "focusplus/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "focusplus/error.hpp"

namespace focusplus {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix product shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

// Four independent partial sums: breaks the add latency chain without
// relying on -ffast-math, and keeps a fixed summation order.
double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size(), n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (std::size_t i = n4; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw Error(ErrorCode::DimensionMismatch, "jacobi_eigen needs a square matrix");

  Matrix a = symmetric;
  Matrix v = Matrix::identity(n);  // columns are eigenvectors while iterating

  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double threshold = tolerance * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  SymmetricEigen out;
  while (out.sweeps < max_sweeps) {
    if (off_norm() <= threshold) {
      out.converged = true;
      break;
    }
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!out.converged && off_norm() <= threshold) out.converged = true;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    out.values[r] = a(order[r], order[r]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(r, k) = v(k, order[r]);
  }
  return out;
}

Matrix least_squares(const Matrix& a_in, const Matrix& rhs_in) {
  const std::size_t m = a_in.rows();
  const std::size_t n = a_in.cols();
  if (rhs_in.rows() != m) throw Error(ErrorCode::DimensionMismatch, "least_squares rhs rows");
  if (m < n) throw Error(ErrorCode::DegenerateGeometry, "underdetermined least-squares system");

  Matrix a = a_in;
  Matrix b = rhs_in;
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error(ErrorCode::DegenerateGeometry, "rank-deficient least-squares system");
    const double alpha = a(k, k) > 0.0 ? -norm : norm;
    std::vector<double> h(m - k);
    for (std::size_t i = k; i < m; ++i) h[i - k] = a(i, k);
    h[0] -= alpha;
    const double hh = dot(h, h);
    if (hh == 0.0) continue;
    auto reflect = [&](Matrix& target, std::size_t col) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += h[i - k] * target(i, col);
      s = 2.0 * s / hh;
      for (std::size_t i = k; i < m; ++i) target(i, col) -= s * h[i - k];
    };
    for (std::size_t j = k; j < n; ++j) reflect(a, j);
    for (std::size_t j = 0; j < b.cols(); ++j) reflect(b, j);
  }

  Matrix x(n, b.cols());
  for (std::size_t col = 0; col < b.cols(); ++col) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, col);
      for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x(j, col);
      if (a(ii, ii) == 0.0) throw Error(ErrorCode::DegenerateGeometry, "rank-deficient least-squares system");
      x(ii, col) = s / a(ii, ii);
    }
  }
  return x;
}

double condition_number(const Matrix& a) {
  Matrix gram = a.transposed() * a;
  SymmetricEigen eig = jacobi_eigen(gram);
  const double hi = eig.values.front();
  const double lo = eig.values.back();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

}  // namespace focusplus

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace focusplus {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Eigen-decomposition of a symmetric matrix. Eigenvalues are sorted in
/// descending order (stable with respect to the diagonal position, so exact
/// ties keep axis order); `vectors` holds the matching unit eigenvectors as rows.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
  int sweeps = 0;
  bool converged = false;
};

/// Cyclic Jacobi rotations. Stops once the off-diagonal Frobenius norm drops to
/// `tolerance` times the Frobenius norm of the input.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-12, int max_sweeps = 10000);

/// Least-squares solution of A x = b for a tall, full-column-rank A via
/// Householder QR. Returns the solution columns for every column of `rhs`.
Matrix least_squares(const Matrix& a, const Matrix& rhs);

/// 2-norm condition number of a tall matrix (ratio of extreme singular values).
double condition_number(const Matrix& a);

}  // namespace focusplus

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "focusplus/linalg.hpp"

namespace focusplus::pca {

struct PcaModel {
  std::vector<double> mean;                  // d_in
  Matrix components;                         // k x d_in, orthonormal rows
  std::vector<double> explained_variance;    // k eigenvalues of the sample covariance
  std::vector<double> explained_variance_ratio;

  std::size_t k() const noexcept { return components.rows(); }
  std::size_t input_dim() const noexcept { return components.cols(); }

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

struct FitOptions {
  double tolerance = 1e-12;
  int max_sweeps = 10000;
  /// Above this input dimension the top-k subspace is found by block subspace
  /// iteration on the covariance instead of a full Jacobi decomposition.
  std::size_t dense_limit = 192;
};

/// Top-k principal axes of the rows of `samples` (covariance divisor n-1).
/// Each component's largest-magnitude entry is made positive.
/// Throws InsufficientSamples or RankDeficient.
PcaModel fit(const Matrix& samples, std::size_t k, const FitOptions& options = {});

std::vector<double> transform(const PcaModel& model, std::span<const double> x);
std::vector<double> inverse_transform(const PcaModel& model, std::span<const double> y);

void write_model(const PcaModel& model, std::ostream& out);
PcaModel read_model(std::istream& in);

}  // namespace focusplus::pca

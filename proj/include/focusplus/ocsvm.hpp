#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "focusplus/kernels.hpp"
#include "focusplus/linalg.hpp"

namespace focusplus::anomaly {

/// Trained one-class SVM: f(x) = sum_i alpha_i K(sv_i, x) - rho, positive inside
/// the learned region. The alphas are normalized so that they sum to 1.
struct OneClassSvmModel {
  Matrix support_vectors;
  std::vector<double> alphas;
  double rho = 0.0;
  KernelSpec kernel;
  double nu = 0.5;
  double score_scale = 1.0;  // median |f(x_i)| over the training set, floored at 1e-6
  std::size_t training_count = 0;

  std::size_t dimension() const noexcept { return support_vectors.cols(); }
  friend bool operator==(const OneClassSvmModel&, const OneClassSvmModel&) = default;
};

struct SolverOptions {
  double tolerance = 1e-6;              // maximal KKT violation at exit
  std::size_t iterations_per_sample = 100;
};

/// Raw dual solution over all training points.
struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> gradient;  // Q alpha
  double rho = 0.0;
  double objective = 0.0;        // 0.5 alpha^T Q alpha
  double max_violation = 0.0;
  std::size_t iterations = 0;
};

/// SMO with second-order working-set selection for
///   min 0.5 a^T Q a   s.t.  0 <= a_i <= 1/(nu n),  sum a_i = 1.
/// Throws InfeasibleNu, or NonConvergence (with the reached violation) at the iteration cap.
DualSolution solve_one_class_dual(const Matrix& gram, double nu, const SolverOptions& options = {});

/// Throws InfeasibleNu, NonFiniteFeature, NonConvergence.
OneClassSvmModel train_ocsvm(const Matrix& samples, double nu, const KernelSpec& kernel,
                             const SolverOptions& options = {});
/// Same, reusing a Gram matrix the caller already holds for `samples`.
OneClassSvmModel train_ocsvm_with_gram(const Matrix& samples, const Matrix& gram, double nu, const KernelSpec& kernel,
                                       const SolverOptions& options = {});

/// Throws DimensionMismatch.
double decision_value(const OneClassSvmModel& model, std::span<const double> x);

/// Logistic of -f/s: 0.5 on the boundary, towards 1 outside, towards 0 inside.
double level_from_decision(double decision, double score_scale) noexcept;
double anomaly_level(const OneClassSvmModel& model, std::span<const double> x);

void write_model(const OneClassSvmModel& model, std::ostream& out);
OneClassSvmModel read_model(std::istream& in);

}  // namespace focusplus::anomaly

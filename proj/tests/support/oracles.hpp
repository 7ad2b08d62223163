#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the engine's numerical code.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "focusplus/geometry.hpp"
#include "focusplus/linalg.hpp"

namespace oracle {

inline std::string template_path() { return std::string(FOCUSPLUS_DATA_DIR) + "/canonical_face_v1.txt"; }
const focusplus::CanonicalFaceTemplate& face_template();

/// Exact solution of the one-class dual  min 0.5 a'Qa, 0 <= a <= c, sum a = 1
/// by enumerating every (lower, upper, free) partition of the variables and
/// keeping the KKT point with the smallest objective. rho follows the same
/// rule as the solver contract (free average, else bound midpoint).
struct QpSolution {
  std::vector<double> alpha;
  double rho = 0.0;
  double objective = 0.0;
  bool found = false;
};
QpSolution one_class_dual_exact(const focusplus::Matrix& q, double c);

/// Projected-gradient descent on the same problem (step 1e-3, refined to 1e-6).
QpSolution one_class_dual_projected(const focusplus::Matrix& q, double c);

/// Adaptive Simpson quadrature of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);
/// Integral of f over [a, inf) through x = a + t / (1 - t).
double integrate_tail(const std::function<double(double)>& f, double a, double tol = 1e-13);

double f_density(double x, double d1, double d2);
double chi2_density(double x, double k);

/// Symmetric eigen-decomposition through Eigen's self-adjoint solver,
/// eigenvalues descending, eigenvectors as rows.
void dense_eigen(const focusplus::Matrix& sym, std::vector<double>& values, focusplus::Matrix& vectors);

/// Unbiased sample covariance, written out as the textbook double loop.
focusplus::Matrix sample_covariance(const focusplus::Matrix& x);

focusplus::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Peak resident set size of this process in kilobytes.
long peak_rss_kb();

}  // namespace oracle

#include <omp.h>

#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "expect.hpp"
#include "focusplus/kernels.hpp"
#include "oracles.hpp"

using namespace focusplus;
using oracle::thrown;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels are bitwise identical for every thread count") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(67, 23, rng);
  const Matrix q = oracle::random_matrix(41, 23, rng);
  std::vector<double> coef(67);
  for (double& c : coef) c = std::abs(oracle::random_matrix(1, 1, rng)(0, 0));
  const Matrix sym = oracle::sample_covariance(x);
  const Matrix basis = oracle::random_matrix(9, 23, rng);
  const KernelSpec rbf{KernelSpec::Type::Rbf, 0.07};
  const KernelSpec lin{KernelSpec::Type::Linear, 0.0};

  Matrix s_sq, s_gram, s_lin, s_cov, s_rs;
  std::vector<double> s_dec(q.rows());
  kernels::serial::pairwise_sq_dist(x, s_sq);
  kernels::serial::gram(x, rbf, s_gram);
  kernels::serial::gram(x, lin, s_lin);
  kernels::serial::covariance(x, 66.0, s_cov);
  kernels::serial::rows_times_symmetric(basis, sym, s_rs);
  kernels::serial::decision_values(x, coef, rbf, 0.25, q, s_dec);

  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 4, 7}) {
    omp_set_num_threads(threads);
    Matrix o_sq, o_gram, o_lin, o_cov, o_rs;
    std::vector<double> o_dec(q.rows());
    kernels::omp::pairwise_sq_dist(x, o_sq);
    kernels::omp::gram(x, rbf, o_gram);
    kernels::omp::gram(x, lin, o_lin);
    kernels::omp::covariance(x, 66.0, o_cov);
    kernels::omp::rows_times_symmetric(basis, sym, o_rs);
    kernels::omp::decision_values(x, coef, rbf, 0.25, q, o_dec);
    CHECK(bitwise_equal(s_sq, o_sq));
    CHECK(bitwise_equal(s_gram, o_gram));
    CHECK(bitwise_equal(s_lin, o_lin));
    CHECK(bitwise_equal(s_cov, o_cov));
    CHECK(bitwise_equal(s_rs, o_rs));
    CHECK(bitwise_equal(s_dec, o_dec));
  }
  omp_set_num_threads(saved);
}

TEST_CASE("serial kernels agree with their definitions") {
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(20, 6, rng);
  const KernelSpec rbf{KernelSpec::Type::Rbf, 0.3};
  Matrix sq, gram, cov;
  kernels::serial::pairwise_sq_dist(x, sq);
  kernels::serial::gram(x, rbf, gram);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < 6; ++c) d += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      CHECK(std::abs(sq(i, j) - d) < 1e-12);
      CHECK(std::abs(gram(i, j) - std::exp(-0.3 * d)) < 1e-14);
    }

  // covariance() takes a centered matrix.
  Matrix centered = x;
  for (std::size_t c = 0; c < 6; ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < 20; ++r) m += x(r, c);
    m /= 20.0;
    for (std::size_t r = 0; r < 20; ++r) centered(r, c) -= m;
  }
  kernels::serial::covariance(centered, 19.0, cov);
  const Matrix want = oracle::sample_covariance(x);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(cov(i, j) - want(i, j)) < 1e-12);

  std::vector<double> coef{0.5, 0.25, 0.25};
  Matrix sv(3, 6);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 6; ++c) sv(r, c) = x(r, c);
  std::vector<double> out(20);
  kernels::serial::decision_values(sv, coef, rbf, 0.1, x, out);
  for (std::size_t qi = 0; qi < 20; ++qi) {
    double s = 0.0;
    for (std::size_t r = 0; r < 3; ++r) s += coef[r] * std::exp(-0.3 * sq(r, qi));
    CHECK(std::abs(out[qi] - (s - 0.1)) < 1e-14);
  }
  CHECK(thrown([&] { kernels::serial::decision_values(sv, std::vector<double>{1.0}, rbf, 0.0, x, out); }) ==
        "DimensionMismatch");
}

TEST_CASE("Jacobi eigen-decomposition matches the dense oracle") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = oracle::sample_covariance(oracle::random_matrix(30, 8, rng));
    const auto eig = jacobi_eigen(a);
    CHECK(eig.converged);
    std::vector<double> values;
    Matrix vectors;
    oracle::dense_eigen(a, values, vectors);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(std::abs(eig.values[i] - values[i]) < 1e-12);
      double p = 0.0;
      for (std::size_t c = 0; c < 8; ++c) p += eig.vectors(i, c) * vectors(i, c);
      CHECK(std::abs(std::abs(p) - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("least squares and condition number") {
  // Exact fit: b = 2 + 3 t.
  Matrix a(4, 2), rhs(4, 1);
  for (std::size_t r = 0; r < 4; ++r) {
    a(r, 0) = 1.0;
    a(r, 1) = static_cast<double>(r);
    rhs(r, 0) = 2.0 + 3.0 * static_cast<double>(r);
  }
  const Matrix sol = least_squares(a, rhs);
  CHECK(std::abs(sol(0, 0) - 2.0) < 1e-12);
  CHECK(std::abs(sol(1, 0) - 3.0) < 1e-12);
  Matrix d(3, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-3;
  CHECK(std::abs(condition_number(d) - 1e3) < 1e-6);
  Matrix dep(3, 2, 1.0);
  CHECK(thrown([&] { least_squares(dep, Matrix(3, 1)); }) == "DegenerateGeometry");
  CHECK(thrown([&] { least_squares(Matrix(1, 2), Matrix(1, 1)); }) == "DegenerateGeometry");
}

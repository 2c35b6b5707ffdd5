#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sobundle/linalg.hpp"

using namespace sobundle;
using namespace sobundle::linalg;

TEST_CASE("pd_modification leaves SPD matrices alone and floors the rest") {
  const Matrix I = Matrix::Identity(3, 3);
  CHECK(pd_modification(I) == I);
  CHECK(pd_modification(Matrix::Zero(2, 2)).isApprox(kDefaultPdEps * Matrix::Identity(2, 2), 1e-14));

  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << -1, 2;
  Matrix expect = Matrix::Zero(2, 2);
  expect.diagonal() << 2 * kDefaultPdEps, 2;
  CHECK((pd_modification(a) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pd_modification: floor, idempotence, Cholesky") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 8;
    const Matrix a = oracle::random_symmetric(rng, n, -3, 3);
    const Matrix m = pd_modification(a);
    CHECK((m - m.transpose()).norm() == 0);
    const double floor = kDefaultPdEps * std::max(1.0, spectral_norm(a));
    CHECK(oracle::jacobi_eigenvalues(m)[0] >= floor * (1 - 1e-6));
    CHECK((pd_modification(m) - m).cwiseAbs().maxCoeff() <= 1e-12 * (1 + m.norm()));
    CHECK(Eigen::LLT<Matrix>(m).info() == Eigen::Success);
  }
}

TEST_CASE("pd_modification rejects non-finite input") {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pd_modification(a), Error);
  CHECK_THROWS_AS(spectral_norm(a), Error);
}

TEST_CASE("spectral_norm") {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 3, -5;
  CHECK(spectral_norm(a) == doctest::Approx(5));
  CHECK(spectral_norm(Matrix::Identity(4, 4)) == doctest::Approx(1));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix r = oracle::random_symmetric(rng, 2 + trial % 10, -4, 4);
    const Vector ev = oracle::jacobi_eigenvalues(r);
    const double ref = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
    CHECK(std::abs(spectral_norm(r) - ref) <= 1e-10 * ref);
  }
}

TEST_CASE("metric_solve") {
  Vector v(3);
  v << 1, -2, 0.5;
  CHECK(metric_solve(Matrix::Identity(3, 3), v).quad == doctest::Approx(v.squaredNorm()));
  CHECK(metric_solve(4 * Matrix::Identity(2, 2), Vector::Unit(2, 0) * 2).quad == doctest::Approx(1));
  CHECK(metric_solve(Matrix::Identity(2, 2), Vector::Zero(2)).quad == 0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix m = oracle::random_symmetric(rng, n, 0.2, 5);
    const Vector x = oracle::random_vector(rng, n);
    const Vector y = oracle::random_vector(rng, n);
    const Matrix inv = m.inverse();
    const auto s = metric_solve(m, x);
    CHECK(std::abs(s.quad - x.dot(inv * x)) <= 1e-9 * (1 + std::abs(s.quad)));
    CHECK((s.solution - inv * x).norm() <= 1e-9 * (1 + s.solution.norm()));
    // polarization: (x+y)^T M^-1 (x+y) = x^T M^-1 x + y^T M^-1 y + 2 x^T M^-1 y
    const double lhs = metric_solve(m, x + y).quad;
    const double rhs = s.quad + metric_solve(m, y).quad + 2 * x.dot(metric_solve(m, y).solution);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * (1 + std::abs(lhs)));
  }

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1;
  CHECK_THROWS_AS(metric_solve(bad, Vector::Ones(2)), Error);
}

TEST_CASE("symmetrize") {
  Matrix a(2, 2);
  a << 1, 2, 4, 3;
  const Matrix s = symmetrize(a);
  CHECK(s(0, 1) == 3);
  CHECK(s(1, 0) == 3);
  CHECK(all_finite(s));
}

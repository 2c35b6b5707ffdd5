#include <cmath>
#include <random>

#include "sobundle/problem.hpp"

namespace sobundle {

namespace {

// std::uniform_real_distribution is implementation-defined; map the raw
// 64-bit engine output ourselves so instances are identical everywhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  Vector uniform_vector(int n, double lo, double hi) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Matrix orthogonal(int n) {
    Matrix m(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = uniform(-1.0, 1.0);
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ();
  }

  /// Q^T diag(u) Q with u uniform on [lo, hi].
  Matrix symmetric(int n, double lo, double hi) {
    const Matrix q = orthogonal(n);
    const Vector u = uniform_vector(n, lo, hi);
    Matrix s = q.transpose() * u.asDiagonal() * q;
    return 0.5 * (s + s.transpose());
  }

  /// Uniform point in the ball of the given radius.
  Vector in_ball(int n, double radius) {
    Vector d = uniform_vector(n, -1.0, 1.0);
    while (d.norm() < 1e-12) d = uniform_vector(n, -1.0, 1.0);
    d.normalize();
    return radius * std::pow(uniform(0.0, 1.0), 1.0 / n) * d;
  }

private:
  std::mt19937_64 engine_;
};

// Perturbation size of the linear terms inside the hard cluster.
constexpr double kClusterNoise = 1e-3;

}  // namespace

Problem gen_piecewise_quadratic(std::uint64_t seed, int N, int m1, int m2, Difficulty difficulty) {
  if (N < 2 || m1 < 1 || m2 < 1) throw Error("gen_piecewise_quadratic: need N >= 2, m1 >= 1, m2 >= 1");
  Rng rng(seed);

  const Vector x0 = rng.uniform_vector(N, -1.0, 1.0);

  std::vector<SmoothPiece> objective;
  objective.reserve(m1);
  for (int i = 0; i < m1; ++i) {
    const double alpha = rng.uniform(-1.0, 1.0);
    Vector a = rng.uniform_vector(N, -1.0, 1.0);
    Vector center = rng.uniform_vector(N, -1.0, 1.0);
    Matrix A = rng.symmetric(N, -1.0, 2.0);
    objective.emplace_back(alpha, std::move(a), std::move(A), std::move(center));
  }

  // Constraint 0 carries the positive definite matrix that bounds the
  // feasible set. In the hard setting the first ceil(m2/3) constraints share
  // it and form a cluster whose level sets almost coincide.
  const Matrix pd = rng.symmetric(N, 0.5, 2.0);
  const int cluster = difficulty == Difficulty::Hard ? (m2 + 2) / 3 : 0;
  Vector common;
  if (cluster > 0) {
    Vector dir = rng.uniform_vector(N, -1.0, 1.0);
    while (dir.norm() < 1e-12) dir = rng.uniform_vector(N, -1.0, 1.0);
    common = x0 + dir.normalized();
  }

  std::vector<SmoothPiece> constraint;
  constraint.reserve(m2);
  for (int j = 0; j < m2; ++j) {
    Vector b;
    Vector center;
    Matrix B;
    if (j < cluster) {
      center = common + rng.in_ball(N, 1.0);
      B = pd;
      // b_j = -B (common - x_j) + eta_j with eta_j orthogonal to x0 - common:
      // then every cluster member has the same value both at x0 and at the
      // common point, and they differ only by eta_j^T (x - common).
      Vector eta = kClusterNoise * rng.uniform_vector(N, -1.0, 1.0);
      const Vector axis = (x0 - common).normalized();
      eta -= eta.dot(axis) * axis;
      b = -B * (common - center) + eta;
    } else {
      b = rng.uniform_vector(N, -1.0, 1.0);
      center = difficulty == Difficulty::Easy ? rng.uniform_vector(N, -5.0, 5.0)
                                              : rng.uniform_vector(N, -1.0, 1.0);
      B = j == 0 ? pd : rng.symmetric(N, -1.0, 2.0);
    }
    const Vector h = x0 - center;
    const double beta = -(b.dot(h) + 0.5 * h.dot(B * h)) - 0.5;
    constraint.emplace_back(beta, std::move(b), std::move(B), std::move(center));
  }

  Problem p;
  p.name = "pwq-N" + std::to_string(N) + "-m" + std::to_string(m2) + "-" + to_string(difficulty) +
           "-s" + std::to_string(seed);
  p.n = N;
  p.objective = std::make_shared<MaxOfSmooth>(std::move(objective));
  p.constraint = std::make_shared<MaxOfSmooth>(std::move(constraint));
  p.B = Matrix::Zero(0, N);
  p.b = Vector::Zero(0);
  p.x0 = x0;
  p.m1 = m1;
  p.m2 = m2;
  p.seed = seed;
  p.difficulty = difficulty;
  return p;
}

}  // namespace sobundle

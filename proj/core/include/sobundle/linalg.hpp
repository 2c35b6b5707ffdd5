#pragma once

#include "sobundle/types.hpp"

namespace sobundle::linalg {

inline constexpr double kDefaultPdEps = 1e-8;

/// Positive definite modification by eigenvalue flooring.
///
/// The floor is `eps * max(1, |A|)` with `|A|` the spectral norm. A matrix
/// whose smallest eigenvalue already reaches the floor is returned unchanged,
/// which makes the operation idempotent.
Matrix pd_modification(const Matrix& a, double eps = kDefaultPdEps);

/// Largest absolute eigenvalue of a symmetric matrix.
double spectral_norm(const Matrix& a);

struct MetricSolve {
  Vector solution;  // M^{-1} v
  double quad = 0;  // v^T M^{-1} v
};

/// Solves with an SPD matrix by Cholesky. Throws if M is not SPD.
MetricSolve metric_solve(const Matrix& m, const Vector& v);

/// Returns (A + A^T) / 2.
Matrix symmetrize(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace sobundle::linalg

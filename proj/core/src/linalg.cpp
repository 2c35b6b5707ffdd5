#include "sobundle/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace sobundle {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::L: return "l";
    case Variant::Full: return "full";
    case Variant::Reduced: return "reduced";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "l" || s == "L") return Variant::L;
  if (s == "full" || s == "Full") return Variant::Full;
  if (s == "reduced" || s == "Reduced") return Variant::Reduced;
  throw Error("unknown variant '" + s + "' (expected l, full or reduced)");
}

namespace linalg {

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix pd_modification(const Matrix& a, double eps) {
  if (!a.allFinite()) throw Error("pd_modification: non-finite matrix entries");
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector& lambda = es.eigenvalues();
  const double norm = lambda.cwiseAbs().maxCoeff();
  const double floor = eps * std::max(1.0, norm);
  if (lambda.minCoeff() >= floor) return a;
  const Vector clipped = lambda.cwiseMax(floor);
  Matrix out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return symmetrize(out);
}

double spectral_norm(const Matrix& a) {
  if (!a.allFinite()) throw Error("spectral_norm: non-finite matrix entries");
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MetricSolve metric_solve(const Matrix& m, const Vector& v) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error("metric_solve: matrix is not positive definite");
  MetricSolve out;
  out.solution = llt.solve(v);
  out.quad = std::max(0.0, v.dot(out.solution));
  return out;
}

}  // namespace linalg
}  // namespace sobundle

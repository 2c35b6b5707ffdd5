#include "sobundle/problem.hpp"

#include <cmath>
#include <sstream>

namespace sobundle {

SmoothPiece::SmoothPiece(double alpha, Vector a, Matrix A, Vector center)
    : alpha_(alpha), a_(std::move(a)), A_(std::move(A)), center_(std::move(center)) {
  const auto n = a_.size();
  if (A_.rows() != n || A_.cols() != n || center_.size() != n)
    throw Error("SmoothPiece: inconsistent dimensions");
  A_ = 0.5 * (A_ + A_.transpose());
}

double SmoothPiece::value(const Vector& x) const {
  const Vector h = x - center_;
  return alpha_ + a_.dot(h) + 0.5 * h.dot(A_ * h);
}

Vector SmoothPiece::gradient(const Vector& x) const { return a_ + A_ * (x - center_); }

MaxOfSmooth::MaxOfSmooth(std::vector<SmoothPiece> pieces, std::vector<double> weights)
    : pieces_(std::move(pieces)), weights_(std::move(weights)) {
  if (pieces_.empty()) throw Error("max_of_smooth: empty piece list");
  if (weights_.empty()) weights_.assign(pieces_.size(), 1.0);
  if (weights_.size() != pieces_.size()) throw Error("max_of_smooth: weight count mismatch");
  for (double w : weights_)
    if (!(w > 0)) throw Error("max_of_smooth: weights must be positive");
  const int n = pieces_.front().dim();
  for (const auto& p : pieces_)
    if (p.dim() != n) throw Error("max_of_smooth: pieces of different dimension");
}

Vector MaxOfSmooth::piece_values(const Vector& x) const {
  Vector v(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) v[i] = weights_[i] * pieces_[i].value(x);
  return v;
}

std::size_t MaxOfSmooth::active_piece(const Vector& x) const {
  std::size_t best = 0;
  double best_value = weights_[0] * pieces_[0].value(x);
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    const double v = weights_[i] * pieces_[i].value(x);
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

OracleValue MaxOfSmooth::eval(const Vector& x) const {
  const std::size_t i = active_piece(x);
  const double w = weights_[i];
  return {w * pieces_[i].value(x), w * pieces_[i].gradient(x), w * pieces_[i].hessian()};
}

std::shared_ptr<const Oracle> constant_oracle(int n, double value) {
  return std::make_shared<FunctionOracle>([n, value](const Vector&) {
    return OracleValue{value, Vector::Zero(n), Matrix::Zero(n, n)};
  });
}

const char* to_string(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

Difficulty difficulty_from_string(const std::string& s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "hard") return Difficulty::Hard;
  throw Error("unknown difficulty '" + s + "' (expected easy or hard)");
}

void Problem::check_start() const {
  if (x0.size() != n) throw InfeasibleStartError("starting point has wrong dimension");
  const double F0 = constraint->eval(x0).value;
  if (!(F0 < 0)) {
    std::ostringstream os;
    os << "starting point not strictly feasible (F(x0) = " << F0 << ")";
    throw InfeasibleStartError(os.str());
  }
  if (B.rows() > 0) {
    const Vector r = B * x0 - b;
    if (r.maxCoeff() > 0) throw InfeasibleStartError("starting point violates B x <= b");
  }
}

EvalRecord evaluate(const Problem& problem, const Vector& y) {
  if (y.size() != problem.n || !y.allFinite())
    throw EvaluationError("evaluate: point is not a finite vector of length n", y);
  OracleValue fo = problem.objective->eval(y);
  OracleValue co = problem.constraint->eval(y);
  if (!std::isfinite(fo.value) || !std::isfinite(co.value) || !fo.grad.allFinite() ||
      !co.grad.allFinite() || !fo.hess.allFinite() || !co.hess.allFinite())
    throw EvaluationError("evaluate: oracle returned non-finite data", y);
  if (fo.grad.size() != problem.n || co.grad.size() != problem.n ||
      fo.hess.rows() != problem.n || co.hess.rows() != problem.n)
    throw EvaluationError("evaluate: oracle returned data of wrong dimension", y);
  EvalRecord r;
  r.y = y;
  r.f = fo.value;
  r.F = co.value;
  r.g = std::move(fo.grad);
  r.gh = std::move(co.grad);
  r.G = 0.5 * (fo.hess + fo.hess.transpose());
  r.Gh = 0.5 * (co.hess + co.hess.transpose());
  return r;
}

}  // namespace sobundle

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sobundle/types.hpp"

namespace sobundle {

/// Value, one subgradient and one Hessian substitute of a locally Lipschitz
/// function at a point.
struct OracleValue {
  double value = 0;
  Vector grad;
  Matrix hess;
};

class Oracle {
public:
  virtual ~Oracle() = default;
  virtual OracleValue eval(const Vector& x) const = 0;
};

/// q(x) = alpha + a^T (x - center) + 1/2 (x - center)^T A (x - center)
class SmoothPiece {
public:
  SmoothPiece(double alpha, Vector a, Matrix A, Vector center);

  int dim() const { return static_cast<int>(a_.size()); }
  double alpha() const { return alpha_; }
  const Vector& a() const { return a_; }
  const Matrix& A() const { return A_; }
  const Vector& center() const { return center_; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  const Matrix& hessian() const { return A_; }

private:
  double alpha_;
  Vector a_;
  Matrix A_;
  Vector center_;
};

/// x -> max_i c_i q_i(x). Derivative data comes from the lowest-indexed
/// maximizer.
class MaxOfSmooth final : public Oracle {
public:
  explicit MaxOfSmooth(std::vector<SmoothPiece> pieces, std::vector<double> weights = {});

  OracleValue eval(const Vector& x) const override;

  /// Weighted values c_i q_i(x) of every piece.
  Vector piece_values(const Vector& x) const;
  /// Index of the piece whose data eval() returns.
  std::size_t active_piece(const Vector& x) const;

  const std::vector<SmoothPiece>& pieces() const { return pieces_; }
  const std::vector<double>& weights() const { return weights_; }
  int dim() const { return pieces_.front().dim(); }

private:
  std::vector<SmoothPiece> pieces_;
  std::vector<double> weights_;
};

/// Adapts an arbitrary callable.
class FunctionOracle final : public Oracle {
public:
  using Fn = std::function<OracleValue(const Vector&)>;
  explicit FunctionOracle(Fn fn) : fn_(std::move(fn)) {}
  OracleValue eval(const Vector& x) const override { return fn_(x); }

private:
  Fn fn_;
};

std::shared_ptr<const Oracle> constant_oracle(int n, double value);

enum class Difficulty { Easy, Hard };
const char* to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

/// min f(x) s.t. F(x) <= 0, B x <= b. Immutable once built; shared freely
/// between concurrent runs.
struct Problem {
  std::string name;
  int n = 0;
  std::shared_ptr<const Oracle> objective;
  std::shared_ptr<const Oracle> constraint;
  Matrix B;  // rows x n, possibly 0 rows
  Vector b;
  Vector x0;

  // Generator metadata, when the problem came from gen_piecewise_quadratic.
  int m1 = 0;
  int m2 = 0;
  std::optional<std::uint64_t> seed;
  std::optional<Difficulty> difficulty;

  int linear_rows() const { return static_cast<int>(B.rows()); }

  /// Throws InfeasibleStartError unless F(x0) < 0 and B x0 <= b.
  void check_start() const;
};

class EvaluationError : public Error {
public:
  EvaluationError(const std::string& what, Vector y) : Error(what), y_(std::move(y)) {}
  const Vector& point() const { return y_; }

private:
  Vector y_;
};

class InfeasibleStartError : public Error {
public:
  using Error::Error;
};

/// Everything one oracle call returns: (f, g, G) and (F, ĝ, Ĝ) at y.
struct EvalRecord {
  Vector y;
  double f = 0;
  double F = 0;
  Vector g;
  Vector gh;
  Matrix G;
  Matrix Gh;
};

EvalRecord evaluate(const Problem& problem, const Vector& y);

/// Evaluation front-end owned by a single run; counts oracle calls (Na).
class Evaluator {
public:
  explicit Evaluator(const Problem& problem) : problem_(&problem) {}
  EvalRecord operator()(const Vector& y) {
    ++count_;
    return evaluate(*problem_, y);
  }
  std::size_t count() const { return count_; }
  const Problem& problem() const { return *problem_; }

private:
  const Problem* problem_;
  std::size_t count_ = 0;
};

// Built-in examples.

/// f = (x1 + 1/2)^2 + (x2 + 3/2)^2, F = max of the two unit-disk constraints.
Problem example_e1();

enum class E2Form {
  Flat,    // F = max(-F1, -F2, F3)
  Nested,  // F = max(-max(F1, F2), F3)
};
Problem example_e2(E2Form form = E2Form::Flat);

/// Names accepted by builtin_problem(): "e1", "e2", "e2-nested".
std::vector<std::string> builtin_problem_names();
std::optional<Problem> builtin_problem(const std::string& name);

/// Random max-of-quadratics instance. Deterministic in the seed.
Problem gen_piecewise_quadratic(std::uint64_t seed, int N, int m1, int m2,
                                Difficulty difficulty);

}  // namespace sobundle

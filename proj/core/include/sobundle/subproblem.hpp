#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "sobundle/types.hpp"

namespace sobundle {

/// Linearization cut of the objective: -alpha + g^T d <= v.
struct ObjectiveCut {
  double alpha = 0;
  Vector g;
};

/// Cut of the constraint: F(x_k) - A + g^T d + 1/2 d^T G d <= 0.
/// An empty G means "use SubproblemSpec::shared_G".
struct ConstraintCut {
  double A = 0;
  Vector g;
  Matrix G;
};

/// Search-direction problem
///
///   min_{d, v}  v + 1/2 d^T W d
///   s.t.        -alpha_j + g_j^T d <= v                     (objective cuts)
///               F(x_k) - A_j + ĝ_j^T d + 1/2 d^T Ḡ_j d <= 0  (constraint cuts)
///               B d <= rhs                                 (rhs = b - B x_k)
///
/// The Reduced variant replaces the quadratic term in every constraint cut
/// by a shared auxiliary u with 1/2 d^T Ḡ d <= u; the L variant drops it.
struct SubproblemSpec {
  Variant variant = Variant::Reduced;
  Matrix W;
  std::vector<ObjectiveCut> objective_cuts;
  std::optional<ObjectiveCut> objective_p;
  std::vector<ConstraintCut> constraint_cuts;
  std::optional<ConstraintCut> constraint_p;
  Matrix shared_G;
  double Fx = -1;
  Matrix B;  // rows x n, may have 0 rows
  Vector rhs;

  int dim() const { return static_cast<int>(W.rows()); }
  int linear_rows() const { return static_cast<int>(B.rows()); }
  std::size_t objective_cut_count() const { return objective_cuts.size() + (objective_p ? 1 : 0); }
  std::size_t constraint_cut_count() const { return constraint_cuts.size() + (constraint_p ? 1 : 0); }

  /// Curvature matrix of constraint cut j (j == constraint_cuts.size() is the p-cut).
  const Matrix& curvature(std::size_t j) const;
};

enum class SolveStatus { Optimal, MaxIter, NumericalFailure };
const char* to_string(SolveStatus s);

struct SubproblemSolution {
  Vector d;
  double vhat = 0;
  double uhat = 0;
  Vector lambda;  // objective cuts, in order
  double lambda_p = 0;
  Vector mu;      // constraint cuts, in order
  double mu_p = 0;
  double mu_quad = 0;  // multiplier of 1/2 d^T Ḡ d <= u (Reduced only)
  Vector nu;           // linear rows
  SolveStatus status = SolveStatus::NumericalFailure;
  int iterations = 0;
  std::chrono::nanoseconds solve_time{0};
  bool relaxed_linear = false;  // some rhs_i <= 0 was relaxed to be strictly positive
  double objective = 0;
  double gap = 0;

  double lambda_sum() const { return lambda.sum() + lambda_p; }
  double mu_sum() const { return mu.sum() + mu_p; }
};

struct IpmOptions {
  double tol_kkt = 1e-9;
  double tol_gap = 1e-9;
  int max_iter = 100;
  double step_fraction = 0.995;
  double sigma_min = 0.1;
  double sigma_max = 0.9;
  double simplex_tol = 1e-6;
  // extra iterations taken after the tolerances are first met
  int polish_iterations = 3;
};

struct InteriorPoint {
  Vector d;
  double vhat = 0;
  double uhat = 0;
};

/// d = 0, v = max_j(-alpha_j) + 1, u = -Fx / 2. Throws if Fx >= 0.
InteriorPoint strictly_feasible_start(const SubproblemSpec& spec);

SubproblemSolution solve(const SubproblemSpec& spec, const IpmOptions& options = {});

struct KktResidual {
  double stationarity = 0;   // |grad_z L|_inf
  double primal = 0;         // max constraint violation
  double dual = 0;           // max negative multiplier magnitude
  double complementarity = 0;  // max |multiplier * constraint value|
  double simplex = 0;        // |sum(lambda) - 1|
  double max() const;
};

KktResidual kkt_residual(const SubproblemSpec& spec, const SubproblemSolution& sol);

struct KktSize {
  int rows_linear = 0;
  int rows_quadratic_blocks = 0;
};

/// Size of the KKT system of an interior-point method on this problem:
/// one row per linear term plus one n-row block per quadratic term.
KktSize kkt_size(const SubproblemSpec& spec);

}  // namespace sobundle

#pragma once

#include "sobundle/problem.hpp"

namespace sobundle {

struct LineSearchParams {
  double m_L = 0.01;
  double m_R = 0.5;
  double m_F = 0.01;
  double zeta = 0.01;
  double theta = 1.0;
  double C_S = 1e50;
  double C_G = 1e50;
  double C_G_hat = 1e50;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double omega1 = 2.0;
  double omega2 = 2.0;
  int i_rho = 3;
  double t0_hat = 0.001;
  int max_loops = 50;
  double pd_eps = 1e-8;
};

struct LineSearchInput {
  const EvalRecord* at_x = nullptr;  // data at x_k, F(x_k) < 0
  Vector d;
  double v = 0;  // predicted descent, < 0
  Variant variant = Variant::Reduced;
  double uhat = 0;  // Reduced: model change bound for infeasible trials
  double t0 = 0.001;
  int i_n = 0;
};

enum class StepKind { Serious, NullObjective, NullConstraint };
const char* to_string(StepKind k);

struct LineSearchOutcome {
  StepKind kind = StepKind::Serious;
  double t_L = 0;
  double t_R = 0;
  double t0 = 0;  // possibly shrunk lower step bound
  bool t0_modified = false;
  EvalRecord at_tL;  // data at x_k + t_L d (the next iterate)
  EvalRecord trial;  // data at x_k + t_R d (the next trial point)
  int iterations = 0;
};

class LineSearchError : public Error {
public:
  LineSearchError(const std::string& what, double t_L, double t_U)
      : Error(what), t_L_(t_L), t_U_(t_U) {}
  double t_L() const { return t_L_; }
  double t_U() const { return t_U_; }

private:
  double t_L_, t_U_;
};

/// Finds 0 <= t_L <= t_R <= 1 on the ray x_k + t d: either a strictly
/// feasible point with sufficient descent (serious step) or a trial point
/// that changes the model of f (feasible) or of F (infeasible) enough.
LineSearchOutcome line_search(const LineSearchInput& in, const LineSearchParams& params, Evaluator& eval);

/// Quadratic model along the ray: values at both bracket ends plus a
/// second derivative (non-positive curvature means "linear").
struct RayModel {
  double at_lo = 0;
  double at_hi = 0;
  double curvature = 0;
};

/// Minimizes the model p subject to model q <= 0 on the zeta-shrunk bracket
/// [t_L + zeta (t_U - t_L)^theta, t_U - zeta (t_U - t_L)^theta]. Falls back to
/// the midpoint when the models are degenerate or q has no feasible point.
double interpolate(double t_L, double t_U, const RayModel& p, const RayModel& q, double zeta, double theta);

/// min(1, C_G / |G|) while i_n <= i_rho, 0 afterwards; 1 for |G| = 0.
double linesearch_rho(double norm_G, int i_n, double C_G, int i_rho);

/// Same, skipping the eigen-decomposition whenever the Frobenius bound
/// already shows |G| <= C_G.
double damping(const Matrix& G, double C_G);

}  // namespace sobundle

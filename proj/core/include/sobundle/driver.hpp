#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "sobundle/linesearch.hpp"
#include "sobundle/problem.hpp"
#include "sobundle/subproblem.hpp"

namespace sobundle {

/// Tuning constants.
struct Params {
  double eps = 1e-5;
  int max_bundle = 0;  // M; 0 means n + 3
  double t0_init = 0.001;
  double t0_hat = 0.001;
  double m_L = 0.01;
  double m_R = 0.5;
  double m_F = 0.01;
  double zeta = 0.01;
  double theta = 1.0;
  double C_S = 1e50;
  double C_G = 1e50;
  double C_G_hat = 1e50;
  double C_G_bar = 1e50;
  int i_rho = 3;
  int i_m = 10;
  int i_r = 50;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double omega1 = 2.0;
  double omega2 = 2.0;
  Variant variant = Variant::Reduced;
  int max_iter = 1000;
  bool paranoid = false;
  bool use_p_cuts = true;
  double pd_eps = 1e-8;
  int line_search_loops = 50;
  IpmOptions ipm;

  /// Throws Error when a constant is outside its admissible range.
  void validate() const;
  LineSearchParams line_search() const;
};

/// Stored data of one trial point, shifted to the current iterate.
struct BundleElement {
  int j = 0;  // origin index
  Vector y;
  double f = 0;
  double F = 0;
  Vector g;
  Vector gh;
  Matrix G;
  Matrix Gh;
  Matrix Gh_bar;  // pd modification of Gh (Full variant only)
  double rho = 1;
  double rho_hat = 1;
  double s = 0;  // locality measure
};

/// Aggregated ("p") data that compresses the bundle history.
struct AggregateState {
  double f_p = 0;
  double F_p = 0;
  Vector g_p;
  Vector gh_p;
  Matrix G_p;
  Matrix Gh_p;
  double s_p = 0;
  double sh_p = 0;
  double kappa_bar = 1;
  // set by aggregate()
  double alpha_p = 0;
  double A_p = 0;
};

struct SolverState {
  int k = 1;
  EvalRecord at_x;  // data at x_k
  std::vector<BundleElement> bundle;
  AggregateState agg;
  int i_n = 0;
  int i_s = 0;
  Matrix W_bar_prev;
  double lambda_newest_prev = 0;
  bool serious_prev1 = false;  // step k-1 was serious
  bool serious_prev2 = false;  // step k-2 was serious
  double t0 = 0.001;
  int next_index = 2;
  int max_bundle = 0;

  const Vector& x() const { return at_x.y; }
};

SolverState initial_state(const EvalRecord& at_x1, const Params& params);

/// Metric matrix W̄ for the search-direction problem (before caching).
Matrix choose_W(const SolverState& state, const Params& params);

struct LocalizedErrors {
  Vector alpha;  // objective, per bundle element
  Vector A;      // constraint, per bundle element
  double alpha_p = 0;
  double A_p = 0;
};

LocalizedErrors localized_errors(const SolverState& state, const Params& params);

/// Builds the search-direction problem of the current iteration.
SubproblemSpec assemble_subproblem(const SolverState& state, const Matrix& W_bar, const LocalizedErrors& errors,
                                   const Params& params, const Problem& problem);

/// Aggregates bundle data with the subproblem multipliers. The result holds
/// the "tilde" quantities (G_p and Gh_p already at iteration k + 1) together
/// with kappa_bar^{k+1} and the recomputed aggregate errors.
AggregateState aggregate(const SolverState& state, const SubproblemSolution& sol, const Params& params);

struct Descent {
  double v = 0;  // predicted descent, <= 0
  double w = 0;  // optimality measure, >= 0
};

Descent compute_vk_wk(const SolverState& state, const SubproblemSpec& spec, const SubproblemSolution& sol,
                      const AggregateState& tilde);

bool check_termination(double w, double eps);

/// Step-7 update after a line search: counters, damping of the new element,
/// locality measures, shifted values and subgradients, bundle selection.
void update_bundle(SolverState& state, const LineSearchOutcome& outcome, const AggregateState& tilde,
                   const Params& params);

enum class RunStatus { Converged, MaxIter, LineSearchFail, SubproblemFail };
const char* to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

struct RunRecord {
  std::string problem;
  Variant variant = Variant::Reduced;
  RunStatus status = RunStatus::MaxIter;
  Vector x_final;
  double f_final = 0;
  double F_final = 0;
  double w_final = 0;
  int N = 0;
  int Nit = 0;
  std::size_t Na = 0;
  std::chrono::nanoseconds t1{0};
  std::chrono::nanoseconds t2{0};  // t1 without subproblem solve time
  std::vector<std::string> remarks;
  std::string message;
};

struct IterationInfo {
  int k = 0;
  bool terminated = false;
  StepKind kind = StepKind::Serious;
  Vector x;  // x_k
  double f = 0;
  double F = 0;
  double w = 0;
  double v = 0;
  double t_L = 0;
  double t0 = 0;
  std::size_t bundle_size = 0;
  double lambda_sum = 1;
  double kappa_bar = 0;
  Vector x_next;
  double f_next = 0;
  double F_next = 0;
};

using IterationCallback = std::function<void(const IterationInfo&)>;

RunRecord run(const Problem& problem, const Params& params, const IterationCallback& callback = {});

/// k, kind, f, F, w_k, v_k, t_L, |J_k| separated by tabs.
std::string format_trace_line(const IterationInfo& info);

}  // namespace sobundle

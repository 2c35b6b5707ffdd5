#include "sobundle/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sobundle/linalg.hpp"

namespace sobundle {

namespace {

// |lambda_newest - 1| below this counts as "the newest cut carries all weight".
constexpr double kNewestLambdaTol = 1e-8;
// Multipliers more negative than this indicate a solver bug, not round-off.
constexpr double kNegativeMultiplierTol = 1e-10;
// A subproblem that stopped early is still used when its KKT residual is this small.
constexpr double kAcceptableResidual = 1e-6;

Matrix bounded(Matrix G, double C) {
  if (G.norm() > C) {
    const double nrm = linalg::spectral_norm(G);
    if (nrm > C) G *= C / nrm;
  }
  return G;
}

Matrix constraint_metric(const Matrix& Gh, const Params& p) {
  return bounded(linalg::pd_modification(Gh, p.pd_eps), p.C_G_bar);
}

double locality(double gamma, double s, double omega) { return gamma * std::pow(s, omega); }

}  // namespace

void Params::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("invalid parameter: ") + what);
  };
  require(eps >= 0, "eps >= 0");
  require(max_bundle == 0 || max_bundle >= 2, "M >= 2");
  require(t0_init > 0 && t0_init < 1, "t0 in (0,1)");
  require(t0_hat > 0 && t0_hat < 1, "t0_hat in (0,1)");
  require(m_L > 0 && m_L < 0.5, "m_L in (0,1/2)");
  require(m_R > m_L && m_R < 1, "m_R in (m_L,1)");
  require(m_F > 0 && m_F < 1, "m_F in (0,1)");
  require(zeta > 0 && zeta < 0.5, "zeta in (0,1/2)");
  require(theta >= 1, "theta >= 1");
  require(C_S > 0 && C_G > 0 && C_G_hat > 0 && C_G_bar > 0, "C_S, C_G, C_G_hat, C_G_bar > 0");
  require(i_rho >= 0 && i_m >= 0 && i_r >= 0, "i_rho, i_m, i_r >= 0");
  require(gamma1 > 0 && gamma2 > 0, "gamma1, gamma2 > 0");
  require(omega1 >= 1 && omega2 >= 1, "omega1, omega2 >= 1");
  require(max_iter >= 1, "max_iter >= 1");
}

LineSearchParams Params::line_search() const {
  LineSearchParams p;
  p.m_L = m_L;
  p.m_R = m_R;
  p.m_F = m_F;
  p.zeta = zeta;
  p.theta = theta;
  p.C_S = C_S;
  p.C_G = C_G;
  p.C_G_hat = C_G_hat;
  p.gamma1 = gamma1;
  p.gamma2 = gamma2;
  p.omega1 = omega1;
  p.omega2 = omega2;
  p.i_rho = i_rho;
  p.t0_hat = t0_hat;
  p.max_loops = line_search_loops;
  p.pd_eps = pd_eps;
  return p;
}

SolverState initial_state(const EvalRecord& at_x1, const Params& params) {
  SolverState st;
  st.k = 1;
  st.at_x = at_x1;
  st.t0 = params.t0_init;
  const int n = static_cast<int>(at_x1.y.size());
  st.max_bundle = params.max_bundle > 0 ? params.max_bundle : n + 3;

  BundleElement e;
  e.j = 1;
  e.y = at_x1.y;
  e.f = at_x1.f;
  e.F = at_x1.F;
  e.g = at_x1.g;
  e.gh = at_x1.gh;
  e.G = at_x1.G;
  e.Gh = at_x1.Gh;
  if (params.variant == Variant::Full) e.Gh_bar = constraint_metric(e.Gh, params);
  st.bundle.push_back(std::move(e));

  AggregateState& a = st.agg;
  a.f_p = at_x1.f;
  a.F_p = at_x1.F;
  a.g_p = at_x1.g;
  a.gh_p = at_x1.gh;
  a.G_p = at_x1.G;
  a.Gh_p = at_x1.Gh;
  a.kappa_bar = 1.0;
  return st;
}

Matrix choose_W(const SolverState& st, const Params& p) {
  if (st.i_n > p.i_m && st.W_bar_prev.size() > 0) return st.W_bar_prev;
  const bool newest = st.serious_prev1 && st.serious_prev2 &&
                      (std::abs(st.lambda_newest_prev - 1.0) <= kNewestLambdaTol || st.i_s > p.i_r);
  const double kb = st.agg.kappa_bar;
  const Matrix W = newest ? Matrix(st.bundle.back().G + kb * st.bundle.back().Gh)
                          : Matrix(st.agg.G_p + kb * st.agg.Gh_p);
  return linalg::pd_modification(W, p.pd_eps);
}

LocalizedErrors localized_errors(const SolverState& st, const Params& p) {
  const auto m = static_cast<Eigen::Index>(st.bundle.size());
  LocalizedErrors e;
  e.alpha.resize(m);
  e.A.resize(m);
  const double fx = st.at_x.f;
  const double Fx = st.at_x.F;
  for (Eigen::Index i = 0; i < m; ++i) {
    const BundleElement& b = st.bundle[i];
    e.alpha[i] = std::max(std::abs(fx - b.f), locality(p.gamma1, b.s, p.omega1));
    e.A[i] = std::max(std::abs(Fx - b.F), locality(p.gamma2, b.s, p.omega2));
  }
  e.alpha_p = std::max(std::abs(fx - st.agg.f_p), locality(p.gamma1, st.agg.s_p, p.omega1));
  e.A_p = std::max(std::abs(Fx - st.agg.F_p), locality(p.gamma2, st.agg.sh_p, p.omega2));
  return e;
}

SubproblemSpec assemble_subproblem(const SolverState& st, const Matrix& W_bar, const LocalizedErrors& e,
                                   const Params& p, const Problem& problem) {
  SubproblemSpec spec;
  spec.variant = p.variant;
  spec.W = W_bar;
  spec.Fx = st.at_x.F;
  const bool with_p = p.use_p_cuts && st.i_s <= p.i_r;
  for (std::size_t i = 0; i < st.bundle.size(); ++i) {
    const BundleElement& b = st.bundle[i];
    spec.objective_cuts.push_back({e.alpha[static_cast<Eigen::Index>(i)], b.g});
    ConstraintCut c{e.A[static_cast<Eigen::Index>(i)], b.gh, Matrix()};
    if (p.variant == Variant::Full) c.G = b.Gh_bar;
    spec.constraint_cuts.push_back(std::move(c));
  }
  if (with_p) {
    spec.objective_p = ObjectiveCut{e.alpha_p, st.agg.g_p};
    spec.constraint_p = ConstraintCut{e.A_p, st.agg.gh_p, Matrix()};
  }
  if (p.variant != Variant::L) spec.shared_G = constraint_metric(st.agg.Gh_p, p);
  spec.B = problem.B;
  if (problem.linear_rows() > 0) spec.rhs = problem.b - problem.B * st.x();
  else spec.rhs = Vector::Zero(0);
  return spec;
}

AggregateState aggregate(const SolverState& st, const SubproblemSolution& sol, const Params& p) {
  const std::size_t m = st.bundle.size();
  if (static_cast<std::size_t>(sol.lambda.size()) != m || static_cast<std::size_t>(sol.mu.size()) != m)
    throw Error("aggregate: multiplier count does not match the bundle");
  auto checked = [](double v) {
    if (v < -kNegativeMultiplierTol) throw Error("aggregate: negative Lagrange multiplier");
    return std::max(0.0, v);
  };

  const AggregateState& old = st.agg;
  const int n = static_cast<int>(st.x().size());
  AggregateState a;

  // objective
  double lp = checked(sol.lambda_p);
  a.f_p = lp * old.f_p;
  a.g_p = lp * old.g_p;
  a.G_p = lp * old.G_p;
  a.s_p = lp * old.s_p;
  for (std::size_t i = 0; i < m; ++i) {
    const BundleElement& b = st.bundle[i];
    const double l = checked(sol.lambda[static_cast<Eigen::Index>(i)]);
    a.f_p += l * b.f;
    a.g_p += l * b.g;
    a.G_p += (l * b.rho) * b.G;
    a.s_p += l * b.s;
  }

  // constraint, weighted by kappa = mu / kappa_bar
  double kb = checked(sol.mu_p);
  for (std::size_t i = 0; i < m; ++i) kb += checked(sol.mu[static_cast<Eigen::Index>(i)]);
  a.kappa_bar = kb;
  a.F_p = 0;
  a.gh_p = Vector::Zero(n);
  a.Gh_p = Matrix::Zero(n, n);
  a.sh_p = 0;
  if (kb > 0) {
    const double kp = checked(sol.mu_p) / kb;
    a.F_p = kp * old.F_p;
    a.gh_p = kp * old.gh_p;
    a.Gh_p = kp * old.Gh_p;
    a.sh_p = kp * old.sh_p;
    for (std::size_t i = 0; i < m; ++i) {
      const BundleElement& b = st.bundle[i];
      const double kj = checked(sol.mu[static_cast<Eigen::Index>(i)]) / kb;
      a.F_p += kj * b.F;
      a.gh_p += kj * b.gh;
      a.Gh_p += (kj * b.rho_hat) * b.Gh;
      a.sh_p += kj * b.s;
    }
  }

  a.alpha_p = std::max(std::abs(st.at_x.f - a.f_p), locality(p.gamma1, a.s_p, p.omega1));
  a.A_p = std::max(std::abs(st.at_x.F - a.F_p), locality(p.gamma2, a.sh_p, p.omega2));
  return a;
}

Descent compute_vk_wk(const SolverState& st, const SubproblemSpec& spec, const SubproblemSolution& sol,
                      const AggregateState& t) {
  const Vector& d = sol.d;
  Matrix M = spec.W;
  if (spec.variant != Variant::L) {
    for (std::size_t j = 0; j < spec.constraint_cuts.size(); ++j)
      M += sol.mu[static_cast<Eigen::Index>(j)] * spec.curvature(j);
    if (spec.constraint_p) M += sol.mu_p * spec.curvature(spec.constraint_cuts.size());
  }
  const double dWd = d.dot(spec.W * d);
  const double dGd = d.dot(M * d) - dWd;

  Vector q = t.g_p + t.kappa_bar * t.gh_p;
  double linear_slack = 0;
  if (spec.linear_rows() > 0) {
    q += spec.B.transpose() * sol.nu;
    linear_slack = sol.nu.dot(spec.rhs);
  }
  const double tail = t.alpha_p + t.kappa_bar * t.A_p + t.kappa_bar * (-st.at_x.F) + linear_slack;

  Descent out;
  out.v = -dWd - 0.5 * dGd - tail;
  out.w = 0.5 * linalg::metric_solve(M, q).quad + tail;
  return out;
}

bool check_termination(double w, double eps) { return w <= eps; }

void update_bundle(SolverState& st, const LineSearchOutcome& out, const AggregateState& t, const Params& p) {
  const EvalRecord& trial = out.trial;
  const double rho_new = st.i_n <= p.i_rho ? damping(trial.G, p.C_G) : 0.0;
  const double rho_hat_new = damping(trial.Gh, p.C_G_hat);

  const bool serious = out.kind == StepKind::Serious;
  if (serious) {
    st.i_n = 0;
    ++st.i_s;
  } else {
    ++st.i_n;
  }

  const Vector& x_next = out.at_tL.y;
  const Vector h = x_next - st.x();
  const double hn = h.norm();

  for (BundleElement& b : st.bundle) {
    const Vector Gh = b.G * h;
    const Vector Ghh = b.Gh * h;
    b.f += b.g.dot(h) + 0.5 * b.rho * h.dot(Gh);
    b.F += b.gh.dot(h) + 0.5 * b.rho_hat * h.dot(Ghh);
    b.g += b.rho * Gh;
    b.gh += b.rho_hat * Ghh;
    b.s += hn;
  }

  BundleElement e;
  e.j = st.next_index++;
  e.y = trial.y;
  const Vector r = x_next - trial.y;
  const Vector Gr = trial.G * r;
  const Vector Ghr = trial.Gh * r;
  e.f = trial.f + trial.g.dot(r) + 0.5 * rho_new * r.dot(Gr);
  e.F = trial.F + trial.gh.dot(r) + 0.5 * rho_hat_new * r.dot(Ghr);
  e.g = trial.g + rho_new * Gr;
  e.gh = trial.gh + rho_hat_new * Ghr;
  e.G = trial.G;
  e.Gh = trial.Gh;
  e.rho = rho_new;
  e.rho_hat = rho_hat_new;
  e.s = r.norm();
  if (p.variant == Variant::Full) e.Gh_bar = constraint_metric(e.Gh, p);

  AggregateState& a = st.agg;
  a.f_p = t.f_p + t.g_p.dot(h) + 0.5 * h.dot(t.G_p * h);
  a.g_p = t.g_p + t.G_p * h;
  a.F_p = t.F_p + t.gh_p.dot(h) + 0.5 * h.dot(t.Gh_p * h);
  a.gh_p = t.gh_p + t.Gh_p * h;
  a.G_p = t.G_p;
  a.Gh_p = t.Gh_p;
  a.s_p = t.s_p + hn;
  a.sh_p = t.sh_p + hn;
  a.kappa_bar = t.kappa_bar;
  a.alpha_p = t.alpha_p;
  a.A_p = t.A_p;

  st.bundle.push_back(std::move(e));
  const auto cap = static_cast<std::size_t>(st.max_bundle);
  if (st.bundle.size() > cap) st.bundle.erase(st.bundle.begin(), st.bundle.end() - static_cast<long>(cap));

  st.at_x = out.at_tL;
  st.t0 = out.t0;
  st.serious_prev2 = st.serious_prev1;
  st.serious_prev1 = serious;
  ++st.k;
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIter: return "max-iter";
    case RunStatus::LineSearchFail: return "linesearch-fail";
    case RunStatus::SubproblemFail: return "subproblem-fail";
  }
  return "?";
}

RunStatus run_status_from_string(const std::string& s) {
  for (RunStatus r : {RunStatus::Converged, RunStatus::MaxIter, RunStatus::LineSearchFail, RunStatus::SubproblemFail})
    if (s == to_string(r)) return r;
  throw Error("unknown run status '" + s + "'");
}

RunRecord run(const Problem& problem, const Params& params, const IterationCallback& callback) {
  params.validate();
  problem.check_start();
  const auto t_start = std::chrono::steady_clock::now();

  Evaluator eval(problem);
  SolverState st = initial_state(eval(problem.x0), params);
  const LineSearchParams ls_params = params.line_search();
  std::chrono::nanoseconds qp_time{0};

  RunRecord rec;
  rec.problem = problem.name;
  rec.variant = params.variant;
  rec.N = problem.n;
  rec.status = RunStatus::MaxIter;
  double w_last = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;

  auto fail = [&](RunStatus status, std::string msg) {
    rec.status = status;
    rec.message = std::move(msg);
  };

  for (; st.k <= params.max_iter; ) {
    iterations = st.k;
    // 1. matrices
    const Matrix W_bar = choose_W(st, params);
    st.W_bar_prev = W_bar;
    // 2. localized errors
    const LocalizedErrors errors = localized_errors(st, params);
    // 3. search direction
    const SubproblemSpec spec = assemble_subproblem(st, W_bar, errors, params, problem);
    SubproblemSolution sol;
    try {
      sol = solve(spec, params.ipm);
    } catch (const Error& e) {
      fail(RunStatus::SubproblemFail, e.what());
      break;
    }
    qp_time += sol.solve_time;
    if (sol.status != SolveStatus::Optimal) {
      const double res = kkt_residual(spec, sol).max();
      if (!(res <= kAcceptableResidual) || std::abs(sol.lambda_sum() - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "subproblem " << to_string(sol.status) << " at k=" << st.k << " (KKT residual " << res << ")";
        fail(RunStatus::SubproblemFail, os.str());
        break;
      }
    }
    if (params.paranoid) {
      const double res = kkt_residual(spec, sol).max();
      if (res > kAcceptableResidual) throw Error("paranoid: subproblem KKT residual too large");
    }
    if (st.i_s > params.i_r) st.i_s = 0;

    // 4. aggregation
    AggregateState tilde;
    Descent dv;
    try {
      tilde = aggregate(st, sol, params);
      dv = compute_vk_wk(st, spec, sol, tilde);
    } catch (const Error& e) {
      fail(RunStatus::SubproblemFail, e.what());
      break;
    }
    w_last = dv.w;

    IterationInfo info;
    info.k = st.k;
    info.x = st.x();
    info.f = st.at_x.f;
    info.F = st.at_x.F;
    info.w = dv.w;
    info.v = dv.v;
    info.t0 = st.t0;
    info.bundle_size = st.bundle.size();
    info.lambda_sum = sol.lambda_sum();
    info.kappa_bar = tilde.kappa_bar;

    // 5. termination
    if (check_termination(dv.w, params.eps)) {
      rec.status = RunStatus::Converged;
      if (callback) {
        info.terminated = true;
        info.x_next = st.x();
        info.f_next = st.at_x.f;
        info.F_next = st.at_x.F;
        callback(info);
      }
      break;
    }
    if (!(dv.v < 0)) {
      std::ostringstream os;
      os << "non-negative predicted descent v=" << dv.v << " at k=" << st.k;
      fail(RunStatus::SubproblemFail, os.str());
      break;
    }

    // 6. line search
    LineSearchInput in;
    in.at_x = &st.at_x;
    in.d = sol.d;
    in.v = dv.v;
    in.variant = params.variant;
    in.uhat = sol.uhat;
    in.t0 = st.t0;
    in.i_n = st.i_n;
    LineSearchOutcome out;
    try {
      out = line_search(in, ls_params, eval);
    } catch (const LineSearchError& e) {
      fail(RunStatus::LineSearchFail, e.what());
      break;
    }
    if (out.t0_modified) {
      std::ostringstream os;
      os << "t0 modified at k=" << st.k << ": " << out.t0;
      rec.remarks.push_back(os.str());
    }

    if (params.paranoid && out.kind == StepKind::Serious) {
      const EvalRecord fresh = evaluate(problem, out.at_tL.y);
      if (!(fresh.F < 0)) throw Error("paranoid: serious iterate is not strictly feasible");
      if (fresh.f > st.at_x.f + params.m_L * dv.v * out.t_L) throw Error("paranoid: insufficient descent");
    }

    st.lambda_newest_prev = sol.lambda[sol.lambda.size() - 1];
    if (callback) {
      info.kind = out.kind;
      info.t_L = out.t_L;
      info.x_next = out.at_tL.y;
      info.f_next = out.at_tL.f;
      info.F_next = out.at_tL.F;
      callback(info);
    }

    // 7. update
    update_bundle(st, out, tilde, params);
  }

  rec.x_final = st.x();
  rec.f_final = st.at_x.f;
  rec.F_final = st.at_x.F;
  rec.w_final = w_last;
  rec.Nit = iterations;
  rec.Na = eval.count();
  rec.t1 = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t_start);
  rec.t2 = rec.t1 - qp_time;
  return rec;
}

std::string format_trace_line(const IterationInfo& info) {
  std::ostringstream os;
  os.precision(10);
  os << info.k << '\t' << (info.terminated ? "stop" : to_string(info.kind)) << '\t' << info.f << '\t' << info.F
     << '\t' << info.w << '\t' << info.v << '\t' << info.t_L << '\t' << info.bundle_size;
  return os.str();
}

}  // namespace sobundle

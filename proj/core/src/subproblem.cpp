#include "sobundle/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sobundle {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max-iter";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

const Matrix& SubproblemSpec::curvature(std::size_t j) const {
  const ConstraintCut& c = j < constraint_cuts.size() ? constraint_cuts[j] : *constraint_p;
  return c.G.size() == 0 ? shared_G : c.G;
}

double KktResidual::max() const {
  return std::max({stationarity, primal, dual, complementarity, simplex});
}

namespace {

// Smallest positive linear-row slack used when x_k sits on (or beyond) a row.
constexpr double kLinearRelaxation = 1e-9;
constexpr double kSlackFloor = 1e-2;
constexpr double kSlackResetFraction = 0.1;
// Polishing stops once every scaled residual is this far below tolerance.
constexpr double kPolishTarget = 1e-3;

bool is_zero(const Matrix& m) { return m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0; }

// Every constraint in the form c_i(z) = c0_i + a_i^T z + 1/2 d^T Q_i d <= 0
// over z = (d, v[, u]). Row order: objective cuts (p last), constraint cuts
// (p last), the u-coupling row (Reduced), linear rows.
struct Formulation {
  int n = 0;
  int nz = 0;
  bool has_u = false;
  int obj_begin = 0, obj_count = 0;
  int con_begin = 0, con_count = 0;
  int quad_row = -1;
  int lin_begin = 0, lin_count = 0;
  Matrix A;
  Vector c0;
  std::vector<const Matrix*> Q;
  const Matrix* W = nullptr;
  bool relaxed = false;

  int rows() const { return static_cast<int>(c0.size()); }
  int v_index() const { return n; }
  int u_index() const { return n + 1; }

  Vector constraint_values(const Vector& z) const {
    Vector c = c0 + A * z;
    for (int i = 0; i < rows(); ++i)
      if (Q[i] != nullptr) c[i] += 0.5 * z.head(n).dot(*Q[i] * z.head(n));
    return c;
  }

  double row_value(int i, const Vector& z) const {
    double v = c0[i] + A.row(i).dot(z);
    if (Q[i] != nullptr) v += 0.5 * z.head(n).dot(*Q[i] * z.head(n));
    return v;
  }

  Matrix jacobian(const Vector& z) const {
    Matrix J = A;
    for (int i = 0; i < rows(); ++i)
      if (Q[i] != nullptr) J.row(i).head(n) += (*Q[i] * z.head(n)).transpose();
    return J;
  }

  Vector objective_gradient(const Vector& z) const {
    Vector g = Vector::Zero(nz);
    g.head(n) = *W * z.head(n);
    g[v_index()] = 1.0;
    return g;
  }

  double objective(const Vector& z) const {
    return z[v_index()] + 0.5 * z.head(n).dot(*W * z.head(n));
  }
};

Formulation formulate(const SubproblemSpec& spec, bool relax_linear) {
  Formulation f;
  f.n = spec.dim();
  const int n = f.n;
  if (spec.W.rows() != n || spec.W.cols() != n) throw Error("subproblem: W must be square");
  f.W = &spec.W;

  std::vector<const ObjectiveCut*> obj;
  for (const auto& c : spec.objective_cuts) obj.push_back(&c);
  if (spec.objective_p) obj.push_back(&*spec.objective_p);
  std::vector<const ConstraintCut*> con;
  for (const auto& c : spec.constraint_cuts) con.push_back(&c);
  if (spec.constraint_p) con.push_back(&*spec.constraint_p);

  Variant variant = spec.variant;
  if (variant == Variant::Reduced && !con.empty() && is_zero(spec.shared_G)) variant = Variant::L;
  f.has_u = variant == Variant::Reduced && !con.empty();
  f.nz = n + 1 + (f.has_u ? 1 : 0);

  f.obj_count = static_cast<int>(obj.size());
  f.con_count = static_cast<int>(con.size());
  f.lin_count = spec.linear_rows();
  const int m = f.obj_count + f.con_count + (f.has_u ? 1 : 0) + f.lin_count;
  f.A = Matrix::Zero(m, f.nz);
  f.c0 = Vector::Zero(m);
  f.Q.assign(m, nullptr);

  int row = 0;
  f.obj_begin = row;
  for (const ObjectiveCut* c : obj) {
    if (c->g.size() != n) throw Error("subproblem: objective cut of wrong dimension");
    f.c0[row] = -c->alpha;
    f.A.row(row).head(n) = c->g.transpose();
    f.A(row, f.v_index()) = -1.0;
    ++row;
  }
  f.con_begin = row;
  for (std::size_t j = 0; j < con.size(); ++j) {
    const ConstraintCut* c = con[j];
    if (c->g.size() != n) throw Error("subproblem: constraint cut of wrong dimension");
    f.c0[row] = spec.Fx - c->A;
    f.A.row(row).head(n) = c->g.transpose();
    if (variant == Variant::Full) {
      const Matrix& G = spec.curvature(j);
      if (G.rows() != n || G.cols() != n) throw Error("subproblem: curvature matrix of wrong size");
      if (!is_zero(G)) f.Q[row] = &G;
    } else if (f.has_u) {
      f.A(row, f.u_index()) = 1.0;
    }
    ++row;
  }
  if (f.has_u) {
    if (spec.shared_G.rows() != n || spec.shared_G.cols() != n)
      throw Error("subproblem: shared curvature matrix of wrong size");
    f.quad_row = row;
    f.A(row, f.u_index()) = -1.0;
    f.Q[row] = &spec.shared_G;
    ++row;
  }
  f.lin_begin = row;
  if (f.lin_count > 0) {
    if (spec.B.cols() != n || spec.rhs.size() != f.lin_count)
      throw Error("subproblem: linear rows of wrong dimension");
    for (int i = 0; i < f.lin_count; ++i) {
      double r = spec.rhs[i];
      if (relax_linear && !(r > 0)) {
        r = kLinearRelaxation;
        f.relaxed = true;
      }
      f.A.row(row).head(n) = spec.B.row(i);
      f.c0[row] = -r;
      ++row;
    }
  }
  return f;
}

// Multipliers of `sol` laid out in formulation row order.
Vector stacked_multipliers(const Formulation& f, const SubproblemSolution& sol) {
  Vector y = Vector::Zero(f.rows());
  const int nl = static_cast<int>(sol.lambda.size());
  y.segment(f.obj_begin, nl) = sol.lambda;
  if (f.obj_count > nl) y[f.obj_begin + nl] = sol.lambda_p;
  const int nm = static_cast<int>(sol.mu.size());
  y.segment(f.con_begin, nm) = sol.mu;
  if (f.con_count > nm) y[f.con_begin + nm] = sol.mu_p;
  if (f.quad_row >= 0) y[f.quad_row] = sol.mu_quad;
  if (f.lin_count > 0) y.segment(f.lin_begin, f.lin_count) = sol.nu;
  return y;
}

Vector stacked_primal(const Formulation& f, const SubproblemSolution& sol) {
  Vector z(f.nz);
  z.head(f.n) = sol.d;
  z[f.v_index()] = sol.vhat;
  if (f.has_u) z[f.u_index()] = sol.uhat;
  return z;
}

// Largest step in (0, 1] keeping x + a*dx >= (1 - tau) x componentwise.
double max_step(const Vector& x, const Vector& dx, double tau) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0) a = std::min(a, -tau * x[i] / dx[i]);
  return a;
}

// Largest step in (0, 1] with c(z + a dz) <= -(1 - tau) s for a convex
// quadratic row currently at c(z) = -s, where along dz the row changes by
// a * slope + a^2 / 2 * curv.
double quadratic_step(double slope, double curv, double s, double tau) {
  const double room = tau * s;
  double a;
  if (curv > 0) a = 2 * room / (slope + std::sqrt(slope * slope + 2 * curv * room));
  else if (slope > 0) a = room / slope;
  else return 1.0;
  return std::min(1.0, a);
}

}  // namespace

InteriorPoint strictly_feasible_start(const SubproblemSpec& spec) {
  if (!(spec.Fx < 0)) throw Error("subproblem: F(x_k) must be strictly negative");
  InteriorPoint p;
  p.d = Vector::Zero(spec.dim());
  double vmax = -std::numeric_limits<double>::infinity();
  for (const auto& c : spec.objective_cuts) vmax = std::max(vmax, -c.alpha);
  if (spec.objective_p) vmax = std::max(vmax, -spec.objective_p->alpha);
  p.vhat = (std::isfinite(vmax) ? vmax : 0.0) + 1.0;
  p.uhat = -spec.Fx / 2.0;
  return p;
}

namespace {

// How the interior-point iteration treats the convex quadratic rows. The
// plain Newton linearization underestimates them by 1/2 a^2 dz^T Q dz,
// which on badly scaled subproblems can stall the primal residual; the
// strategies differ in how they counter that.
enum class Strategy {
  SecondOrder,  // add the predictor's curvature term to the corrector residual
  SlackReset,   // plain Mehrotra, exact slacks for strictly satisfied rows
  Feasible,     // keep strictly satisfied quadratic rows feasible along the step
};

struct Attempt {
  Vector z, y, s;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double merit = std::numeric_limits<double>::infinity();
};

Attempt run_ipm(const SubproblemSpec& spec, const Formulation& f, const InteriorPoint& start, const IpmOptions& opt,
                Strategy strategy) {
  const int n = f.n;
  const int m = f.rows();

  Vector z(f.nz);
  z.head(n) = start.d;
  z[f.v_index()] = start.vhat;
  // A larger u keeps the coupling row 1/2 d^T G d <= u well inside its
  // feasible region; the linear rows it enters may start infeasible, which
  // the slack formulation absorbs.
  if (f.has_u) z[f.u_index()] = std::max(start.uhat, kSlackFloor);

  Vector s = -f.constraint_values(z);
  if (!f.has_u && s.minCoeff() <= 0) throw Error("subproblem: starting point is not strictly interior");
  // Quadratic rows whose slack is honest (not floored) at the start.
  std::vector<char> exact(m, 0);
  for (int i = 0; i < m; ++i) exact[i] = f.Q[i] != nullptr && s[i] >= kSlackFloor;
  // Rows that are nearly active at the start (e.g. F(x_k) close to 0) would
  // give a badly scaled first Newton system; start their slacks further out.
  s = s.cwiseMax(kSlackFloor);
  // Dual start on the central path with the objective-cut multipliers summing to one.
  const double mu0 = 1.0 / s.segment(f.obj_begin, f.obj_count).cwiseInverse().sum();
  Vector y = mu0 * s.cwiseInverse();

  const double data_scale =
      std::max({1.0, f.c0.cwiseAbs().maxCoeff(), f.A.cwiseAbs().maxCoeff(), spec.W.cwiseAbs().maxCoeff()});

  Attempt best;
  SolveStatus status = SolveStatus::MaxIter;
  int polish_left = 0;
  int it = 0;
  Eigen::LLT<Matrix> llt;
  for (;; ++it) {
    const Vector c = f.constraint_values(z);
    const Matrix J = f.jacobian(z);
    const Vector grad = f.objective_gradient(z);
    const Vector rd = grad + J.transpose() * y;
    const Vector rp = c + s;
    const double gap = s.dot(y);
    const double mu = gap / m;
    const double obj = f.objective(z);

    // Residuals relative to the size of the terms they are made of, so that
    // large (but legitimate) directions from a nearly singular W still stop.
    const double dual_scale =
        std::max({data_scale, grad.lpNorm<Eigen::Infinity>(), (J.transpose() * y).lpNorm<Eigen::Infinity>()});
    const double primal_scale = std::max({data_scale, (c - f.c0).lpNorm<Eigen::Infinity>(), s.lpNorm<Eigen::Infinity>()});
    const double rd_rel = rd.lpNorm<Eigen::Infinity>() / (1.0 + dual_scale);
    const double rp_rel = rp.lpNorm<Eigen::Infinity>() / (1.0 + primal_scale);
    const double gap_rel = gap / (1.0 + std::abs(obj));
    const double merit = std::max({rd_rel / opt.tol_kkt, rp_rel / opt.tol_kkt, gap_rel / opt.tol_gap});
    if (merit < best.merit) {
      best.z = z;
      best.y = y;
      best.s = s;
      best.merit = merit;
    }
    // Once within tolerance, a few more iterations are cheap (the method
    // converges fast here) and pay off when a constraint is active with a
    // tiny multiplier: there the error in d only shrinks like sqrt(gap).
    if (status == SolveStatus::Optimal) {
      if (merit <= kPolishTarget || polish_left-- <= 0) break;
    } else if (rd_rel <= opt.tol_kkt && rp_rel <= opt.tol_kkt && gap_rel <= opt.tol_gap) {
      status = SolveStatus::Optimal;
      polish_left = opt.polish_iterations;
      if (merit <= kPolishTarget || polish_left-- <= 0) break;
    }
    if (it >= opt.max_iter) break;

    // Newton system on z after eliminating s and y:
    //   (H + J^T D J) dz = -rd - J^T (D rp - S^{-1} rc),  D = Y S^{-1}
    const Vector dvec = y.cwiseQuotient(s);
    Matrix K = Matrix::Zero(f.nz, f.nz);
    K.topLeftCorner(n, n) = spec.W;
    for (int i = 0; i < m; ++i)
      if (f.Q[i] != nullptr) K.topLeftCorner(n, n).noalias() += y[i] * *f.Q[i];
    const Matrix Js = dvec.cwiseSqrt().asDiagonal() * J;
    K.noalias() += Js.transpose() * Js;

    llt.compute(K);
    if (llt.info() != Eigen::Success) {
      const double reg = 1e-12 * std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
      K.diagonal().array() += reg;
      llt.compute(K);
      if (llt.info() != Eigen::Success) {
        if (status != SolveStatus::Optimal) status = SolveStatus::NumericalFailure;
        break;
      }
    }

    auto newton = [&](const Vector& r_p, const Vector& rc, Vector& dz, Vector& ds, Vector& dy) {
      const Vector rhs = -rd - J.transpose() * (dvec.cwiseProduct(r_p) - rc.cwiseQuotient(s));
      dz = llt.solve(rhs);
      const Vector Jdz = J * dz;
      ds = -Jdz - r_p;
      dy = dvec.cwiseProduct(Jdz + r_p) - rc.cwiseQuotient(s);
    };

    // predictor
    Vector dz, ds, dy;
    newton(rp, s.cwiseProduct(y), dz, ds, dy);
    const double a_aff = std::min(max_step(s, ds, 1.0), max_step(y, dy, 1.0));
    const double mu_aff = (s + a_aff * ds).dot(y + a_aff * dy) / m;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3), opt.sigma_min, opt.sigma_max);

    // corrector
    Vector rc = s.cwiseProduct(y) + ds.cwiseProduct(dy);
    rc.array() -= sigma * mu;
    Vector rp_corr = rp;
    if (strategy == Strategy::SecondOrder)
      for (int i = 0; i < m; ++i)
        if (f.Q[i] != nullptr) rp_corr[i] += 0.5 * dz.head(n).dot(*f.Q[i] * dz.head(n));
    newton(rp_corr, rc, dz, ds, dy);
    if (!dz.allFinite() || !ds.allFinite() || !dy.allFinite()) {
      if (status != SolveStatus::Optimal) status = SolveStatus::NumericalFailure;
      break;
    }
    double alpha = std::min(max_step(s, ds, opt.step_fraction), max_step(y, dy, opt.step_fraction));
    if (strategy == Strategy::Feasible)
      for (int i = 0; i < m; ++i)
        if (exact[i])
          alpha = std::min(alpha, quadratic_step(J.row(i).dot(dz), dz.head(n).dot(*f.Q[i] * dz.head(n)), s[i],
                                                 opt.step_fraction));
    z += alpha * dz;
    s += alpha * ds;
    y += alpha * dy;
    // Strictly satisfied quadratic rows take their exact slack so the
    // linearization error cannot accumulate in the primal residual.
    for (int i = 0; i < m; ++i) {
      if (f.Q[i] == nullptr) continue;
      const double ci = f.row_value(i, z);
      const bool take = -ci > 0 && (exact[i] || -ci >= kSlackResetFraction * s[i]);
      if (take) s[i] = -ci;
      exact[i] = take;
    }
  }

  best.status = status;
  best.iterations = it;
  return best;
}

}  // namespace

SubproblemSolution solve(const SubproblemSpec& spec, const IpmOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  if (spec.objective_cut_count() == 0) throw Error("subproblem: at least one objective cut is required");

  const Formulation f = formulate(spec, /*relax_linear=*/true);
  const InteriorPoint start = strictly_feasible_start(spec);
  const int n = f.n;

  Attempt a;
  int total_iterations = 0;
  for (Strategy st : {Strategy::SecondOrder, Strategy::SlackReset, Strategy::Feasible}) {
    Attempt next = run_ipm(spec, f, start, opt, st);
    total_iterations += next.iterations;
    const bool better = next.status == SolveStatus::Optimal || a.z.size() == 0 || next.merit < a.merit;
    if (better) a = std::move(next);
    if (a.status == SolveStatus::Optimal) break;
  }
  const Vector& z = a.z;
  const Vector& y = a.y;
  SolveStatus status = a.status;

  SubproblemSolution sol;
  sol.relaxed_linear = f.relaxed;
  sol.iterations = total_iterations;
  sol.d = z.head(n);
  sol.vhat = z[f.v_index()];
  sol.lambda = y.segment(f.obj_begin, static_cast<Eigen::Index>(spec.objective_cuts.size()));
  sol.lambda_p = spec.objective_p ? y[f.obj_begin + f.obj_count - 1] : 0.0;
  sol.mu = y.segment(f.con_begin, static_cast<Eigen::Index>(spec.constraint_cuts.size()));
  sol.mu_p = spec.constraint_p ? y[f.con_begin + f.con_count - 1] : 0.0;
  sol.nu = y.segment(f.lin_begin, f.lin_count);
  sol.objective = f.objective(z);
  sol.gap = a.s.dot(y);

  if (spec.variant == Variant::Reduced) {
    const double model = spec.shared_G.size() ? 0.5 * sol.d.dot(spec.shared_G * sol.d) : 0.0;
    if (f.has_u) {
      sol.uhat = z[f.u_index()];
      sol.mu_quad = y[f.quad_row];
      const double slack_tol = 10 * opt.tol_kkt;
      if (sol.mu_quad <= slack_tol && sol.mu_sum() <= slack_tol) sol.uhat = model;
    } else {
      // Ḡ = 0 was solved as the linear problem; u = 0 is feasible and optimal.
      sol.uhat = 0.0;
      sol.mu_quad = sol.mu_sum();
    }
  } else {
    sol.uhat = spec.variant == Variant::Full && spec.shared_G.size()
                   ? 0.5 * sol.d.dot(spec.shared_G * sol.d)
                   : 0.0;
  }

  // Stationarity in v makes the objective-cut multipliers a convex combination.
  const double lsum = sol.lambda_sum();
  if (std::abs(lsum - 1.0) <= opt.simplex_tol && lsum > 0) {
    sol.lambda /= lsum;
    sol.lambda_p /= lsum;
  } else if (status == SolveStatus::Optimal) {
    status = SolveStatus::NumericalFailure;
  }
  sol.status = status;
  sol.solve_time = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t_start);
  return sol;
}

KktResidual kkt_residual(const SubproblemSpec& spec, const SubproblemSolution& sol) {
  const Formulation f = formulate(spec, /*relax_linear=*/false);
  const Vector z = stacked_primal(f, sol);
  const Vector y = stacked_multipliers(f, sol);
  const Vector c = f.constraint_values(z);
  const Vector rd = f.objective_gradient(z) + f.jacobian(z).transpose() * y;

  KktResidual r;
  r.stationarity = rd.lpNorm<Eigen::Infinity>();
  r.primal = std::max(0.0, c.size() ? c.maxCoeff() : 0.0);
  r.dual = std::max(0.0, y.size() ? -y.minCoeff() : 0.0);
  r.complementarity = y.size() ? y.cwiseProduct(c).cwiseAbs().maxCoeff() : 0.0;
  r.simplex = std::abs(sol.lambda_sum() - 1.0);
  return r;
}

KktSize kkt_size(const SubproblemSpec& spec) {
  const int n = spec.dim();
  const int obj = static_cast<int>(spec.objective_cut_count());
  const int con = static_cast<int>(spec.constraint_cut_count());
  KktSize k;
  k.rows_linear = obj + con + spec.linear_rows() + 1;
  switch (spec.variant) {
    case Variant::L: k.rows_quadratic_blocks = 0; break;
    case Variant::Full: k.rows_quadratic_blocks = con * n; break;
    case Variant::Reduced:
      k.rows_linear += 1;
      k.rows_quadratic_blocks = n;
      break;
  }
  return k;
}

}  // namespace sobundle

#include "sobundle/linesearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sobundle/linalg.hpp"

namespace sobundle {

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Serious: return "serious";
    case StepKind::NullObjective: return "null-f";
    case StepKind::NullConstraint: return "null-F";
  }
  return "?";
}

double linesearch_rho(double norm_G, int i_n, double C_G, int i_rho) {
  if (i_n > i_rho) return 0.0;
  if (norm_G == 0.0) return 1.0;
  return std::min(1.0, C_G / norm_G);
}

double damping(const Matrix& G, double C_G) {
  const double fro = G.norm();
  if (fro <= C_G) return 1.0;
  return std::min(1.0, C_G / linalg::spectral_norm(G));
}

namespace {

struct Interval {
  double lo, hi;
  bool empty() const { return !(lo <= hi); }
};

// {t : q(t) <= 0}, q convex quadratic or linear, as one interval (possibly
// unbounded) or empty.
Interval feasible_set(double t_L, double t_U, const RayModel& q) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double slope = (q.at_hi - q.at_lo) / (t_U - t_L);
  const double c = std::max(0.0, q.curvature);
  // q(t) = q_lo + slope (t - t_L) + c/2 (t - t_L)(t - t_U), written in s = t - t_L
  // q(s) = c/2 s^2 + (slope - c/2 (t_U - t_L)) s + q_lo
  const double a2 = 0.5 * c;
  const double a1 = slope - 0.5 * c * (t_U - t_L);
  const double a0 = q.at_lo;
  if (a2 == 0.0) {
    if (a1 > 0) return {-inf, t_L - a0 / a1};
    if (a1 < 0) return {t_L - a0 / a1, inf};
    return a0 <= 0 ? Interval{-inf, inf} : Interval{1, 0};
  }
  const double disc = a1 * a1 - 4 * a2 * a0;
  if (disc < 0) return {1, 0};
  const double sq = std::sqrt(disc);
  const double qq = -0.5 * (a1 + std::copysign(sq, a1));
  double r1 = qq / a2;
  double r2 = qq != 0.0 ? a0 / qq : r1;
  if (r1 > r2) std::swap(r1, r2);
  return {t_L + r1, t_L + r2};
}

}  // namespace

double interpolate(double t_L, double t_U, const RayModel& p, const RayModel& q, double zeta, double theta) {
  const double width = t_U - t_L;
  const double shrink = zeta * std::pow(width, theta);
  const double lo = t_L + shrink;
  const double hi = t_U - shrink;
  const double mid = 0.5 * (lo + hi);
  const bool finite = std::isfinite(p.at_lo) && std::isfinite(p.at_hi) && std::isfinite(p.curvature) &&
                      std::isfinite(q.at_lo) && std::isfinite(q.at_hi) && std::isfinite(q.curvature);
  if (!finite || !(width > 0)) return mid;

  Interval feas = feasible_set(t_L, t_U, q);
  feas.lo = std::max(feas.lo, lo);
  feas.hi = std::min(feas.hi, hi);
  if (feas.empty()) return mid;

  const double slope = (p.at_hi - p.at_lo) / width;
  const double c = std::max(0.0, p.curvature);
  double t;
  if (c > 0) {
    // p'(t) = slope + c (t - (t_L + t_U) / 2)
    t = 0.5 * (t_L + t_U) - slope / c;
  } else if (slope > 0) {
    t = feas.lo;
  } else if (slope < 0) {
    t = feas.hi;
  } else {
    t = 0.5 * (feas.lo + feas.hi);
  }
  if (!std::isfinite(t)) return mid;
  return std::clamp(t, feas.lo, feas.hi);
}

LineSearchOutcome line_search(const LineSearchInput& in, const LineSearchParams& prm, Evaluator& eval) {
  const EvalRecord& x = *in.at_x;
  const Vector& d = in.d;
  const double dnorm = d.norm();
  if (!(in.v < 0)) throw LineSearchError("line search: predicted descent must be negative", 0, 1);
  if (!(x.F < 0)) throw LineSearchError("line search: x_k is not strictly feasible", 0, 1);

  auto objective_damping = [&](const Matrix& G) { return in.i_n > prm.i_rho ? 0.0 : damping(G, prm.C_G); };

  LineSearchOutcome out;
  out.t0 = in.t0;
  double t_L = 0, t_U = 1, t = 1;
  EvalRecord rec_L = x;
  EvalRecord rec_U;

  for (int loop = 1; loop <= prm.max_loops; ++loop) {
    EvalRecord rec = eval(x.y + t * d);
    out.iterations = loop;

    // 1. modify t_L or t_U
    if (rec.F < 0) {
      // m_L v t can vanish below the resolution of f for tiny t; descent must
      // still be strict.
      if (rec.f <= x.f + prm.m_L * in.v * t && rec.f < x.f) {
        t_L = t;
        rec_L = rec;
      } else {
        t_U = t;
        rec_U = rec;
      }
    } else {
      t_U = t;
      rec_U = rec;
      const double shrunk = prm.t0_hat * t_U;
      if (shrunk < out.t0) {
        out.t0 = shrunk;
        out.t0_modified = true;
      }
    }
    if (t_L >= out.t0) {
      out.kind = StepKind::Serious;
      out.t_L = out.t_R = t_L;
      out.at_tL = rec_L;
      out.trial = std::move(rec_L);
      return out;
    }

    // 2. decide whether the trial point changes the model enough
    const double dt = t_L - t;
    const bool step_ok = (t - t_L) * dnorm <= prm.C_S;
    if (rec.F < 0) {
      const Vector Gd = rec.G * d;
      const double rho = objective_damping(rec.G);
      const double f_shift = rec.f + dt * rec.g.dot(d) + 0.5 * rho * dt * dt * d.dot(Gd);
      const double beta =
          std::max(std::abs(rec_L.f - f_shift), prm.gamma1 * std::pow(std::abs(dt) * dnorm, prm.omega1));
      if (-beta + d.dot(rec.g + rho * dt * Gd) >= prm.m_R * in.v && step_ok) {
        out.kind = StepKind::NullObjective;
        out.t_L = t_L;
        out.t_R = t;
        out.at_tL = std::move(rec_L);
        out.trial = std::move(rec);
        return out;
      }
    } else {
      const Vector Ghd = rec.Gh * d;
      const double rho_hat = damping(rec.Gh, prm.C_G_hat);
      const double F_shift = rec.F + dt * rec.gh.dot(d) + 0.5 * rho_hat * dt * dt * d.dot(Ghd);
      const double beta_hat =
          std::max(std::abs(rec_L.F - F_shift), prm.gamma2 * std::pow(std::abs(dt) * dnorm, prm.omega2));
      double bound = 0.0;
      switch (in.variant) {
        case Variant::Full: {
          const Matrix Gbar = linalg::pd_modification(rec.Gh, prm.pd_eps);
          bound = prm.m_F * (-0.5 * d.dot(Gbar * d));
          break;
        }
        case Variant::Reduced: bound = prm.m_F * (-in.uhat); break;
        case Variant::L: bound = 0.0; break;
      }
      if (rec_L.F - beta_hat + d.dot(rec.gh + rho_hat * dt * Ghd) >= bound && step_ok) {
        out.kind = StepKind::NullConstraint;
        out.t_L = t_L;
        out.t_R = t;
        out.at_tL = std::move(rec_L);
        out.trial = std::move(rec);
        return out;
      }
    }

    // 3. interpolation: curvature along d from the latest evaluation
    const RayModel pm{rec_L.f, rec_U.f, objective_damping(rec.G) * d.dot(rec.G * d)};
    const RayModel qm{rec_L.F, rec_U.F, damping(rec.Gh, prm.C_G_hat) * d.dot(rec.Gh * d)};
    t = interpolate(t_L, t_U, pm, qm, prm.zeta, prm.theta);
  }

  std::ostringstream os;
  os << "line search: no acceptable step after " << prm.max_loops << " trials (bracket [" << t_L << ", "
     << t_U << "])";
  throw LineSearchError(os.str(), t_L, t_U);
}

}  // namespace sobundle

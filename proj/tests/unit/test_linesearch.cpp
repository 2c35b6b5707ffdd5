#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sobundle/linalg.hpp"
#include "sobundle/linesearch.hpp"

using namespace sobundle;

namespace {

using Fn1 = std::function<double(double)>;

// 1-D oracle from value, derivative and second derivative.
std::shared_ptr<const Oracle> scalar_oracle(Fn1 f, Fn1 df, Fn1 ddf) {
  return std::make_shared<FunctionOracle>([=](const Vector& x) {
    return OracleValue{f(x[0]), Vector::Constant(1, df(x[0])), Matrix::Constant(1, 1, ddf(x[0]))};
  });
}

Problem scalar_problem(std::shared_ptr<const Oracle> f, std::shared_ptr<const Oracle> F, double x0) {
  Problem p;
  p.name = "scalar";
  p.n = 1;
  p.objective = std::move(f);
  p.constraint = std::move(F);
  p.B = Matrix(0, 1);
  p.b = Vector(0);
  p.x0 = Vector::Constant(1, x0);
  return p;
}

LineSearchInput input(const EvalRecord& at, double d, double v, double t0, Variant variant = Variant::L) {
  LineSearchInput in;
  in.at_x = &at;
  in.d = Vector::Constant(1, d);
  in.v = v;
  in.t0 = t0;
  in.variant = variant;
  return in;
}

double zero(double) { return 0; }

}  // namespace

TEST_CASE("first trial accepted") {
  const Problem p = scalar_problem(scalar_oracle([](double x) { return x * x; }, [](double x) { return 2 * x; },
                                                 [](double) { return 2.0; }),
                                   constant_oracle(1, -1), 1);
  Evaluator ev(p);
  const EvalRecord at = ev(p.x0);
  const LineSearchOutcome out = line_search(input(at, -1, -1, 0.001), {}, ev);
  CHECK(out.kind == StepKind::Serious);
  CHECK(out.t_L == 1);
  CHECK(out.t_R == 1);
  CHECK(out.iterations == 1);
  CHECK_FALSE(out.t0_modified);
  CHECK(out.at_tL.f == 0);
}

TEST_CASE("infeasible first trial shrinks t0 and finds the feasible part") {
  // f(t) = (t - 0.3)^2, F(t) = t - 0.5 along d = 1 from 0
  const Problem p = scalar_problem(
      scalar_oracle([](double x) { return (x - 0.3) * (x - 0.3); }, [](double x) { return 2 * (x - 0.3); },
                    [](double) { return 2.0; }),
      scalar_oracle([](double x) { return x - 0.5; }, [](double) { return 1.0; }, zero), 0);
  Evaluator ev(p);
  const EvalRecord at = ev(p.x0);
  LineSearchParams prm;
  const LineSearchOutcome out = line_search(input(at, 1, -0.18, 0.01), prm, ev);
  CHECK(out.t0_modified);
  CHECK(out.t0 == doctest::Approx(prm.t0_hat * 1.0));
  REQUIRE(out.kind == StepKind::Serious);
  CHECK(out.t_L > 0);
  CHECK(out.t_L < 0.5);
  CHECK(out.t_L == doctest::Approx(0.3));
  // re-evaluate independently
  const EvalRecord re = evaluate(p, p.x0 + out.t_L * Vector::Ones(1));
  CHECK(re.F < 0);
  CHECK(re.f <= at.f + prm.m_L * -0.18 * out.t_L);
}

TEST_CASE("kink gives a null step on the objective") {
  const Problem p = scalar_problem(
      scalar_oracle([](double x) { return std::abs(x); }, [](double x) { return x >= 0 ? 1.0 : -1.0; }, zero),
      constant_oracle(1, -1), 0.5);
  Evaluator ev(p);
  const EvalRecord at = ev(p.x0);
  LineSearchParams prm;
  const LineSearchOutcome out = line_search(input(at, -1, -0.5, 0.001), prm, ev);
  REQUIRE(out.kind == StepKind::NullObjective);
  CHECK(out.t_L == 0);
  CHECK(out.t_R == 1);
  CHECK(out.trial.y[0] == doctest::Approx(-0.5));
}

TEST_CASE("degenerate input is rejected") {
  const Problem p = scalar_problem(constant_oracle(1, 0), constant_oracle(1, -1), 0);
  Evaluator ev(p);
  const EvalRecord at = ev(p.x0);
  CHECK_THROWS_AS(line_search(input(at, 1, 0.0, 0.001), {}, ev), LineSearchError);
  EvalRecord infeasible = at;
  infeasible.F = 0;
  CHECK_THROWS_AS(line_search(input(infeasible, 1, -1, 0.001), {}, ev), LineSearchError);
}

TEST_CASE("loop cap reports the bracket") {
  // f never decreases, F always feasible and no null-step test passes with C_S = 0
  const Problem p = scalar_problem(
      scalar_oracle([](double x) { return x; }, [](double) { return 1.0; }, zero), constant_oracle(1, -1), 0);
  Evaluator ev(p);
  const EvalRecord at = ev(p.x0);
  LineSearchParams prm;
  prm.C_S = 0;
  prm.max_loops = 7;
  try {
    line_search(input(at, 1, -1, 0.001), prm, ev);
    FAIL("expected LineSearchError");
  } catch (const LineSearchError& e) {
    CHECK(e.t_L() == 0);
    CHECK(e.t_U() < 1);
    CHECK(ev.count() == 1 + 7);
  }
}

TEST_CASE("outcomes satisfy the branch conditions on random instances") {
  std::mt19937_64 rng(8);
  LineSearchParams prm;
  int kinds[3] = {0, 0, 0};
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const Problem p = gen_piecewise_quadratic(seed, 3, 2, 3, seed % 2 ? Difficulty::Easy : Difficulty::Hard);
    Evaluator ev(p);
    const EvalRecord at = ev(p.x0);
    for (Variant variant : {Variant::L, Variant::Full, Variant::Reduced}) {
      LineSearchInput in;
      in.at_x = &at;
      in.d = oracle::random_vector(rng, 3, 2);
      in.v = -std::uniform_real_distribution<double>(0.01, 2)(rng);
      in.variant = variant;
      in.uhat = 0.5 * in.d.squaredNorm();
      in.t0 = 0.01;
      in.i_n = static_cast<int>(seed % 5);
      LineSearchOutcome out;
      try {
        out = line_search(in, prm, ev);
      } catch (const LineSearchError&) {
        continue;
      }
      ++kinds[static_cast<int>(out.kind)];
      CHECK(0 <= out.t_L);
      CHECK(out.t_L <= out.t_R);
      CHECK(out.t_R <= 1);
      CHECK(out.t0 <= in.t0);
      const EvalRecord xl = evaluate(p, at.y + out.t_L * in.d);
      CHECK(xl.F < 0);
      const EvalRecord tr = evaluate(p, at.y + out.t_R * in.d);
      const double dt = out.t_L - out.t_R;
      const double dn = in.d.norm();
      switch (out.kind) {
        case StepKind::Serious:
          CHECK(out.t_L >= out.t0);
          CHECK(xl.f <= at.f + prm.m_L * in.v * out.t_L);
          break;
        case StepKind::NullObjective: {
          CHECK(out.t_L < out.t0);
          CHECK(tr.F < 0);
          const double rho = in.i_n > prm.i_rho ? 0.0 : damping(tr.G, prm.C_G);
          const double shifted = tr.f + dt * tr.g.dot(in.d) + 0.5 * rho * dt * dt * in.d.dot(tr.G * in.d);
          const double beta = std::max(std::abs(xl.f - shifted), prm.gamma1 * std::pow(std::abs(dt) * dn, prm.omega1));
          CHECK(-beta + in.d.dot(tr.g + rho * dt * tr.G * in.d) >= prm.m_R * in.v - 1e-12);
          break;
        }
        case StepKind::NullConstraint: {
          CHECK(out.t_L < out.t0);
          CHECK(tr.F >= 0);
          const double rho = damping(tr.Gh, prm.C_G_hat);
          const double shifted = tr.F + dt * tr.gh.dot(in.d) + 0.5 * rho * dt * dt * in.d.dot(tr.Gh * in.d);
          const double beta = std::max(std::abs(xl.F - shifted), prm.gamma2 * std::pow(std::abs(dt) * dn, prm.omega2));
          double bound = 0;
          if (variant == Variant::Full)
            bound = prm.m_F * -0.5 * in.d.dot(linalg::pd_modification(tr.Gh) * in.d);
          if (variant == Variant::Reduced) bound = prm.m_F * -in.uhat;
          CHECK(xl.F - beta + in.d.dot(tr.gh + rho * dt * tr.Gh * in.d) >= bound - 1e-12);
          break;
        }
      }
    }
  }
  CHECK(kinds[0] > 0);
  CHECK(kinds[1] + kinds[2] > 0);
}

TEST_CASE("interpolate examples") {
  const RayModel flat{0, 0, 0};
  CHECK(interpolate(0, 1, flat, RayModel{-1, -1, 0}, 0.01, 1) == doctest::Approx(0.5));
  // p(t) = (t - 0.2)^2, q = -1
  CHECK(interpolate(0, 1, RayModel{0.04, 0.64, 2}, RayModel{-1, -1, 0}, 0.01, 1) == doctest::Approx(0.2));
  // p decreasing, q(t) = t - 0.6
  CHECK(interpolate(0, 1, RayModel{1, 0, 0}, RayModel{-0.6, 0.4, 0}, 0.01, 1) == doctest::Approx(0.6));
  // q positive everywhere: midpoint of the shrunk interval
  CHECK(interpolate(0, 1, RayModel{1, 0, 0}, RayModel{1, 1, 0}, 0.01, 1) == doctest::Approx(0.5));
  // minimizer outside the shrunk interval is clipped
  CHECK(interpolate(0, 1, RayModel{0, 1, 2}, RayModel{-1, -1, 0}, 0.01, 1) == doctest::Approx(0.01));
}

TEST_CASE("interpolate stays in the shrunk interval") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5), z(0.001, 0.49), th(1, 3);
  for (int i = 0; i < 2000; ++i) {
    const double a = std::abs(u(rng)) / 5, b = a + std::abs(u(rng)) / 5 + 1e-9;
    const double zeta = z(rng), theta = th(rng);
    const RayModel p{u(rng), u(rng), i % 3 ? u(rng) : 0};
    const RayModel q{u(rng), u(rng), i % 4 ? u(rng) : 0};
    const double t = interpolate(a, b, p, q, zeta, theta);
    const double shrink = zeta * std::pow(b - a, theta);
    REQUIRE(t >= a + shrink - 1e-15);
    REQUIRE(t <= b - shrink + 1e-15);
  }
}

TEST_CASE("damping") {
  CHECK(linesearch_rho(0, 0, 1e50, 3) == 1);
  CHECK(linesearch_rho(2, 0, 1, 3) == doctest::Approx(0.5));
  CHECK(linesearch_rho(0.5, 0, 1, 3) == 1);
  CHECK(linesearch_rho(1, 4, 1e50, 3) == 0);
  CHECK(damping(Matrix::Zero(2, 2), 1) == 1);
  Matrix g = Matrix::Zero(2, 2);
  g.diagonal() << 4, -1;
  CHECK(damping(g, 2) == doctest::Approx(0.5));
  CHECK(damping(g, 10) == 1);
}

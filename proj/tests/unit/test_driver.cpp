#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sobundle/driver.hpp"
#include "sobundle/linalg.hpp"

using namespace sobundle;

namespace {

Problem squared_norm(int n) {
  Problem p;
  p.name = "norm2";
  p.n = n;
  p.objective = std::make_shared<FunctionOracle>([n](const Vector& x) {
    return OracleValue{x.squaredNorm(), 2 * x, 2 * Matrix::Identity(n, n)};
  });
  p.constraint = constant_oracle(n, -1);
  p.B = Matrix(0, n);
  p.b = Vector(0);
  p.x0 = Vector::Ones(n);
  return p;
}

EvalRecord record_at(const Vector& y, double f, double F) {
  const int n = static_cast<int>(y.size());
  EvalRecord r;
  r.y = y;
  r.f = f;
  r.F = F;
  r.g = Vector::Zero(n);
  r.gh = Vector::Zero(n);
  r.G = Matrix::Zero(n, n);
  r.Gh = Matrix::Zero(n, n);
  return r;
}

SubproblemSolution multipliers(std::vector<double> lambda, double lambda_p, std::vector<double> mu, double mu_p) {
  SubproblemSolution s;
  s.lambda = Eigen::Map<Vector>(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
  s.mu = Eigen::Map<Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  s.lambda_p = lambda_p;
  s.mu_p = mu_p;
  return s;
}

}  // namespace

TEST_CASE("parameter validation") {
  Params p;
  CHECK_NOTHROW(p.validate());
  auto bad = [](auto mutate) {
    Params q;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), Error);
  };
  bad([](Params& q) { q.m_L = 0.5; });
  bad([](Params& q) { q.m_R = q.m_L; });
  bad([](Params& q) { q.m_F = 1; });
  bad([](Params& q) { q.zeta = 0.5; });
  bad([](Params& q) { q.theta = 0.9; });
  bad([](Params& q) { q.omega1 = 0.5; });
  bad([](Params& q) { q.gamma2 = 0; });
  bad([](Params& q) { q.C_G_bar = 0; });
  bad([](Params& q) { q.eps = -1; });
  bad([](Params& q) { q.t0_init = 1; });
  bad([](Params& q) { q.max_bundle = 1; });
}

TEST_CASE("check_termination") {
  CHECK(check_termination(0, 1e-5));
  CHECK(check_termination(1e-5, 1e-5));
  CHECK_FALSE(check_termination(std::nextafter(1e-5, 1.0), 1e-5));
}

TEST_CASE("localized errors") {
  Params p;
  SolverState st = initial_state(record_at(Vector::Zero(2), 1, -1), p);
  CHECK(localized_errors(st, p).alpha[0] == 0);
  st.bundle[0].f = 0.5;
  st.bundle[0].s = 0.1;
  CHECK(localized_errors(st, p).alpha[0] == doctest::Approx(0.5));
  st.bundle[0].f = 1;
  st.bundle[0].s = 2;
  const LocalizedErrors e = localized_errors(st, p);
  CHECK(e.alpha[0] == doctest::Approx(4));
  CHECK(e.A[0] == doctest::Approx(4));
  CHECK(e.alpha_p == 0);
}

TEST_CASE("aggregation") {
  Params p;
  EvalRecord at = record_at(Vector::Zero(2), 1, -1);
  SolverState st = initial_state(at, p);
  BundleElement e = st.bundle[0];
  e.f = 3;
  e.F = -2;
  e.g = Vector::Ones(2);
  e.gh = -Vector::Ones(2);
  e.G = Matrix::Identity(2, 2);
  e.Gh = 2 * Matrix::Identity(2, 2);
  e.s = 0.25;
  st.bundle = {e, e};
  st.bundle[0].f = 7;  // differs from e

  SUBCASE("vertex of the simplex") {
    const AggregateState a = aggregate(st, multipliers({0, 1}, 0, {0, 2}, 0), p);
    CHECK(a.f_p == 3);
    CHECK(a.g_p == e.g);
    CHECK(a.G_p == e.G);
    CHECK(a.s_p == 0.25);
    CHECK(a.kappa_bar == 2);
    CHECK(a.F_p == -2);
    CHECK(a.gh_p == e.gh);
    CHECK(a.Gh_p == e.Gh);
  }
  SUBCASE("identical cuts") {
    st.bundle[0].f = 3;
    const AggregateState a = aggregate(st, multipliers({0.5, 0.5}, 0, {0.1, 0.3}, 0), p);
    CHECK(a.f_p == doctest::Approx(3));
    CHECK(a.g_p.isApprox(e.g));
    CHECK(a.F_p == doctest::Approx(-2));
    CHECK(a.kappa_bar == doctest::Approx(0.4));
  }
  SUBCASE("no constraint weight") {
    const AggregateState a = aggregate(st, multipliers({0.5, 0.5}, 0, {0, 0}, 0), p);
    CHECK(a.kappa_bar == 0);
    CHECK(a.F_p == 0);
    CHECK(a.gh_p.isZero());
    CHECK(a.Gh_p.isZero());
  }
  SUBCASE("damping enters the matrices") {
    st.bundle[1].rho = 0.5;
    const AggregateState a = aggregate(st, multipliers({0, 1}, 0, {0, 0}, 0), p);
    CHECK(a.G_p == 0.5 * e.G);
  }
  SUBCASE("negative multipliers") {
    CHECK_NOTHROW(aggregate(st, multipliers({1 + 1e-11, -1e-11}, 0, {0, 0}, 0), p));
    CHECK_THROWS_AS(aggregate(st, multipliers({1.1, -0.1}, 0, {0, 0}, 0), p), Error);
    CHECK_THROWS_AS(aggregate(st, multipliers({1}, 0, {0}, 0), p), Error);
  }
}

TEST_CASE("choose_W branches") {
  Params p;
  EvalRecord at = record_at(Vector::Zero(2), 0, -1);
  at.G = Matrix::Identity(2, 2);
  at.Gh = 3 * Matrix::Identity(2, 2);
  SolverState st = initial_state(at, p);
  CHECK(choose_W(st, p).isApprox(4 * Matrix::Identity(2, 2)));  // k = 1: G_1 + kappa_bar Gh_1

  st.agg.G_p = -Matrix::Identity(2, 2);
  st.agg.Gh_p = Matrix::Zero(2, 2);
  st.bundle.back().G = 2 * Matrix::Identity(2, 2);
  st.bundle.back().Gh = Matrix::Zero(2, 2);
  CHECK(choose_W(st, p) == linalg::pd_modification(-Matrix::Identity(2, 2)));

  st.serious_prev1 = st.serious_prev2 = true;
  st.lambda_newest_prev = 1;
  CHECK(choose_W(st, p) == 2 * Matrix::Identity(2, 2));
  st.lambda_newest_prev = 0.5;
  CHECK(choose_W(st, p) != 2 * Matrix::Identity(2, 2));
  st.i_s = p.i_r + 1;
  CHECK(choose_W(st, p) == 2 * Matrix::Identity(2, 2));

  st.W_bar_prev = 7 * Matrix::Identity(2, 2);
  st.i_n = p.i_m;
  CHECK(choose_W(st, p) == 2 * Matrix::Identity(2, 2));
  st.i_n = p.i_m + 1;
  CHECK(choose_W(st, p) == st.W_bar_prev);
}

TEST_CASE("v and w on zero data") {
  Params p;
  p.variant = Variant::L;
  SolverState st = initial_state(record_at(Vector::Zero(2), 0, -1), p);
  SubproblemSpec spec;
  spec.variant = Variant::L;
  spec.W = Matrix::Identity(2, 2);
  spec.Fx = -1;
  spec.B = Matrix(0, 2);
  spec.rhs = Vector(0);
  SubproblemSolution sol = multipliers({1}, 0, {0}, 0);
  sol.d = Vector::Zero(2);
  sol.nu = Vector(0);
  AggregateState t;
  t.g_p = Vector::Zero(2);
  t.gh_p = Vector::Zero(2);
  t.G_p = Matrix::Zero(2, 2);
  t.Gh_p = Matrix::Zero(2, 2);
  t.kappa_bar = 0;
  const Descent dw = compute_vk_wk(st, spec, sol, t);
  CHECK(dw.w == 0);
  CHECK(dw.v == 0);
  CHECK(check_termination(dw.w, 0));
}

TEST_CASE("bundle update shifts") {
  Params p;
  p.max_bundle = 3;
  EvalRecord at = record_at(Vector::Zero(2), 1, -1);
  at.g = Vector::Ones(2);
  at.G = 2 * Matrix::Identity(2, 2);
  SolverState st = initial_state(at, p);
  st.bundle[0].rho = 0.5;

  Vector h(2);
  h << 0.1, -0.2;
  LineSearchOutcome out;
  out.kind = StepKind::Serious;
  out.t_L = out.t_R = 1;
  out.t0 = st.t0;
  out.at_tL = record_at(h, 0.5, -0.5);
  out.trial = out.at_tL;
  AggregateState t = st.agg;
  update_bundle(st, out, t, p);

  CHECK(st.bundle.size() == 2);
  CHECK(st.bundle[0].g.isApprox(Vector::Ones(2) + 0.5 * 2 * h));
  CHECK(st.bundle[0].f == doctest::Approx(1 + h.sum() + 0.5 * 0.5 * 2 * h.squaredNorm()));
  CHECK(st.bundle[0].s == doctest::Approx(h.norm()));
  CHECK(st.bundle[1].s == 0);
  CHECK(st.bundle[1].rho == 1);  // zero Hessian
  CHECK(st.x() == h);
  CHECK(st.i_n == 0);
  CHECK(st.i_s == 1);
  CHECK(st.k == 2);
  CHECK(st.agg.g_p.isApprox(Vector::Ones(2) + 2 * h));

  // null step: counters and FIFO eviction down to M
  out.kind = StepKind::NullObjective;
  out.at_tL = st.at_x;
  for (int i = 0; i < 3; ++i) update_bundle(st, out, st.agg, p);
  CHECK(st.i_n == 3);
  CHECK(st.bundle.size() == 3);
  CHECK(st.bundle.back().j == st.next_index - 1);
  CHECK(st.bundle.front().j == st.next_index - 3);
}

TEST_CASE("smooth convex problem without an active constraint") {
  Params p;
  const RunRecord r = run(squared_norm(2), p);
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.x_final.norm() <= 1e-4);
  CHECK(r.F_final < 0);
  CHECK(r.w_final <= p.eps);
}

TEST_CASE("E1 converges for every variant") {
  const double f_star = oracle::e1_grid_optimum(1e-3).f;
  for (Variant v : {Variant::L, Variant::Full, Variant::Reduced}) {
    Params p;
    p.variant = v;
    const RunRecord r = run(example_e1(), p);
    CHECK(r.status == RunStatus::Converged);
    CHECK(r.F_final < 0);
    CHECK(std::abs(r.f_final - f_star) <= 1e-4);
    CHECK(r.t2 < r.t1);
    CHECK(r.Na >= static_cast<std::size_t>(r.Nit));
  }
}

TEST_CASE("infinite tolerance stops after the first subproblem") {
  Params p;
  p.eps = std::numeric_limits<double>::infinity();
  const RunRecord r = run(example_e1(), p);
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.Nit == 1);
  CHECK(r.Na == 1);
  CHECK(r.x_final == example_e1().x0);
}

TEST_CASE("infeasible start is rejected") {
  Problem p = example_e1();
  p.x0 = Vector::Zero(2);
  CHECK_THROWS_AS(run(p, Params{}), InfeasibleStartError);
}

TEST_CASE("iteration invariants on generated problems") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Problem prob = gen_piecewise_quadratic(seed, 8, 1, 4, seed % 2 ? Difficulty::Easy : Difficulty::Hard);
    for (Variant v : {Variant::L, Variant::Full, Variant::Reduced}) {
      Params p;
      p.variant = v;
      p.eps = 1e-4;
      const int M = prob.n + 3;
      int serious = 0;
      const RunRecord r = run(prob, p, [&](const IterationInfo& it) {
        CHECK(it.w >= 0);
        CHECK(it.v <= 0);
        CHECK(it.bundle_size <= static_cast<std::size_t>(M));
        CHECK(std::abs(it.lambda_sum - 1) <= 1e-8);
        CHECK(it.kappa_bar >= 0);
        if (!it.terminated && it.kind == StepKind::Serious) {
          ++serious;
          const EvalRecord fresh = evaluate(prob, it.x_next);
          CHECK(fresh.F < 0);
          CHECK(fresh.f <= it.f + p.m_L * it.v * it.t_L);
          CHECK(fresh.f < it.f);
        }
      });
      // Linear cuts cannot model the curvature of the constraint, so L may
      // stall against it; the invariants above still have to hold.
      if (v != Variant::L) CHECK(r.status == RunStatus::Converged);
      CHECK(serious > 0);
    }
  }
}

TEST_CASE("Full and Reduced follow the same iterates for a single quadratic constraint") {
  Problem prob = gen_piecewise_quadratic(2, 6, 2, 1, Difficulty::Easy);
  std::vector<Vector> xs[2];
  int idx = 0;
  for (Variant v : {Variant::Full, Variant::Reduced}) {
    Params p;
    p.variant = v;
    p.max_iter = 10;
    run(prob, p, [&](const IterationInfo& it) {
      if (!it.terminated) xs[idx].push_back(it.x_next);
    });
    ++idx;
  }
  REQUIRE(xs[0].size() == xs[1].size());
  for (std::size_t i = 0; i < xs[0].size(); ++i) CHECK((xs[0][i] - xs[1][i]).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("runs are deterministic") {
  const Problem prob = gen_piecewise_quadratic(5, 10, 1, 5, Difficulty::Hard);
  Params p;
  p.eps = 1e-3;
  const RunRecord a = run(prob, p), b = run(prob, p);
  CHECK(a.Nit == b.Nit);
  CHECK(a.Na == b.Na);
  CHECK(a.f_final == b.f_final);
  CHECK(a.F_final == b.F_final);
  CHECK(a.w_final == b.w_final);
  CHECK(a.x_final == b.x_final);
}

TEST_CASE("paranoid mode agrees with the default run") {
  const Problem prob = example_e1();
  Params p;
  const RunRecord a = run(prob, p);
  p.paranoid = true;
  const RunRecord b = run(prob, p);
  CHECK(a.x_final == b.x_final);
  CHECK(a.Nit == b.Nit);
}

TEST_CASE("names and trace") {
  for (RunStatus s : {RunStatus::Converged, RunStatus::MaxIter, RunStatus::LineSearchFail, RunStatus::SubproblemFail})
    CHECK(run_status_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(run_status_from_string("done"), Error);
  for (Variant v : {Variant::L, Variant::Full, Variant::Reduced}) CHECK(variant_from_string(to_string(v)) == v);

  IterationInfo info;
  info.k = 3;
  info.kind = StepKind::NullConstraint;
  info.bundle_size = 4;
  const std::string line = format_trace_line(info);
  CHECK(std::count(line.begin(), line.end(), '\t') == 7);
  CHECK(line.rfind("3\t", 0) == 0);
  CHECK(line.substr(line.size() - 2) == "\t4");
}

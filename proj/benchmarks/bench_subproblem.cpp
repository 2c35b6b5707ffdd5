#include <benchmark/benchmark.h>

#include <random>

#include "sobundle/driver.hpp"
#include "sobundle/problem.hpp"
#include "sobundle/subproblem.hpp"

using namespace sobundle;

namespace {

Matrix random_pd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() / n + Matrix::Identity(n, n);
}

Vector random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// A bundle of `cuts` objective and constraint cuts at a strictly feasible point.
SubproblemSpec make_spec(Variant variant, int n, int cuts) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(n) * 1000 + static_cast<std::uint64_t>(cuts));
  std::uniform_real_distribution<double> u(0, 1);
  SubproblemSpec s;
  s.variant = variant;
  s.W = Matrix::Identity(n, n);
  s.Fx = -0.5;
  s.shared_G = random_pd(rng, n);
  for (int j = 0; j < cuts; ++j) {
    s.objective_cuts.push_back({u(rng), random_vector(rng, n)});
    ConstraintCut c{u(rng), random_vector(rng, n), Matrix()};
    if (variant == Variant::Full) c.G = random_pd(rng, n);
    s.constraint_cuts.push_back(std::move(c));
  }
  s.B = Matrix(0, n);
  s.rhs = Vector(0);
  return s;
}

void BM_Subproblem(benchmark::State& state, Variant variant) {
  const int n = static_cast<int>(state.range(0));
  const SubproblemSpec spec = make_spec(variant, n, n + 3);
  int iterations = 0;
  for (auto _ : state) {
    const SubproblemSolution sol = solve(spec);
    iterations = sol.iterations;
    benchmark::DoNotOptimize(sol.d.data());
  }
  state.counters["ipm_iter"] = iterations;
  state.counters["kkt_rows"] = static_cast<double>(kkt_size(spec).rows_quadratic_blocks);
}

void BM_Run(benchmark::State& state, Variant variant) {
  const int n = static_cast<int>(state.range(0));
  const Problem prob = gen_piecewise_quadratic(1, n, n / 10, n / 2, Difficulty::Easy);
  Params p;
  p.variant = variant;
  p.eps = 1e-3;
  p.max_iter = 2000;
  int nit = 0;
  for (auto _ : state) {
    const RunRecord r = run(prob, p);
    nit = r.Nit;
    benchmark::DoNotOptimize(r.f_final);
  }
  state.counters["Nit"] = nit;
}

}  // namespace

BENCHMARK_CAPTURE(BM_Subproblem, L, Variant::L)->Arg(5)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_Subproblem, Full, Variant::Full)->Arg(5)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_Subproblem, Reduced, Variant::Reduced)->Arg(5)->Arg(10)->Arg(20)->Arg(40);

BENCHMARK_CAPTURE(BM_Run, Full, Variant::Full)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Run, Reduced, Variant::Reduced)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

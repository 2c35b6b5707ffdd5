// Command line front end: solve, gen, bench, report.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sobundle/bench.hpp"
#include "sobundle/driver.hpp"
#include "sobundle/instance_io.hpp"

namespace fs = std::filesystem;
using namespace sobundle;

namespace {

constexpr int kOk = 0;
constexpr int kNotConverged = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Problem resolve_problem(const std::string& spec) {
  if (auto p = builtin_problem(spec)) return *p;
  if (fs::exists(spec)) return load_instance(spec);
  std::string names;
  for (const auto& n : builtin_problem_names()) names += (names.empty() ? "" : ", ") + n;
  throw UsageError("unknown problem '" + spec + "' (built-in: " + names + "; or a path to an instance file)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw UsageError("empty list '" + s + "'");
  return out;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw UsageError("seed range '" + s + "' is empty");
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("bad seed range '" + s + "' (expected a..b)");
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path.string());
  os << text;
  if (!os) throw UsageError("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void print_record(const RunRecord& r) {
  std::printf("problem   %s\n", r.problem.c_str());
  std::printf("variant   %s\n", to_string(r.variant));
  std::printf("status    %s\n", to_string(r.status));
  if (!r.message.empty()) std::printf("message   %s\n", r.message.c_str());
  std::printf("f         %.12g\n", r.f_final);
  std::printf("F         %.12g\n", r.F_final);
  std::printf("w         %.6g\n", r.w_final);
  std::printf("x        ");
  for (Eigen::Index i = 0; i < r.x_final.size(); ++i) std::printf(" %.10g", r.x_final[i]);
  std::printf("\n");
  std::printf("Nit       %d\n", r.Nit);
  std::printf("Na        %zu\n", r.Na);
  std::printf("t1_ms     %.3f\n", std::chrono::duration<double, std::milli>(r.t1).count());
  std::printf("t2_ms     %.3f\n", std::chrono::duration<double, std::milli>(r.t2).count());
  for (const auto& rem : r.remarks) std::printf("remark    %s\n", rem.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasible second order bundle solver"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one problem");
  std::string problem_name, variant_name = "reduced";
  Params params;
  bool trace = false;
  solve->add_option("--problem", problem_name, "Built-in name (e1, e2, e2-nested) or instance path")->required();
  solve->add_option("--variant", variant_name, "l | full | reduced")->check(CLI::IsMember({"l", "full", "reduced"}));
  solve->add_option("--eps", params.eps, "Termination tolerance")->check(CLI::NonNegativeNumber);
  solve->add_option("--max-iter", params.max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  solve->add_flag("--paranoid", params.paranoid, "Re-check feasibility and descent at every serious step");
  solve->add_flag("--trace", trace, "Print one tab-separated line per iteration");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a piecewise-quadratic instance");
  int gN = 0, gm1 = 0, gm2 = 0;
  std::uint64_t gseed = 1;
  std::string gdiff = "easy", gout;
  gen->add_option("--N", gN, "Dimension")->required()->check(CLI::Range(2, 100000));
  gen->add_option("--m1", gm1, "Objective pieces")->required()->check(CLI::PositiveNumber);
  gen->add_option("--m2", gm2, "Constraint pieces")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gseed, "Seed")->required();
  gen->add_option("--difficulty", gdiff, "easy | hard")->check(CLI::IsMember({"easy", "hard"}));
  gen->add_option("--out", gout, "Output path")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a suite and write CSV/JSON results");
  std::string suite = "examples", Ns = "20", m2s = "half", seeds = "1..1", variants = "reduced", bdiff = "easy", bout;
  double beps = -1;
  int bmax_iter = 0, threads = 1;
  bench_cmd->add_option("--suite", suite, "examples | pwq")->check(CLI::IsMember({"examples", "pwq"}));
  bench_cmd->add_option("--N", Ns, "Comma-separated dimensions (pwq)");
  bench_cmd->add_option("--m2", m2s, "half | full | half,full (pwq)");
  bench_cmd->add_option("--seeds", seeds, "Seed range a..b (pwq)");
  bench_cmd->add_option("--variant", variants, "Comma-separated variants");
  bench_cmd->add_option("--difficulty", bdiff, "easy | hard (pwq)")->check(CLI::IsMember({"easy", "hard"}));
  bench_cmd->add_option("--eps", beps, "Termination tolerance (default 1e-5 examples, 1e-3 pwq)");
  bench_cmd->add_option("--max-iter", bmax_iter, "Iteration limit (default 2000 for pwq)");
  bench_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bout, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Record-plot data rp = s(B) - s(A)");
  std::string metric = "c", ra, rb, rout;
  report->add_option("--metric", metric, "c | nit | t1")->check(CLI::IsMember({"c", "nit", "t1"}));
  report->add_option("--a", ra, "Results CSV of algorithm A")->required();
  report->add_option("--b", rb, "Results CSV of algorithm B")->required();
  report->add_option("--out", rout, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) {
      params.variant = variant_from_string(variant_name);
      const Problem problem = resolve_problem(problem_name);
      IterationCallback cb;
      if (trace) {
        std::printf("k\tkind\tf\tF\tw\tv\tt_L\t|J|\n");
        cb = [](const IterationInfo& info) { std::printf("%s\n", format_trace_line(info).c_str()); };
      }
      const RunRecord r = run(problem, params, cb);
      print_record(r);
      return r.status == RunStatus::Converged ? kOk : kNotConverged;
    }
    if (*gen) {
      const Problem p = gen_piecewise_quadratic(gseed, gN, gm1, gm2, difficulty_from_string(gdiff));
      save_instance(p, gout);
      std::printf("wrote %s (%s)\n", gout.c_str(), p.name.c_str());
      return kOk;
    }
    if (*bench_cmd) {
      bench::SuiteConfig cfg;
      cfg.suite = bench::suite_from_string(suite);
      cfg.N.clear();
      for (const auto& s : split_list(Ns)) {
        try {
          cfg.N.push_back(std::stoi(s));
        } catch (const std::logic_error&) {
          throw UsageError("bad dimension '" + s + "'");
        }
      }
      cfg.m2.clear();
      for (const auto& s : split_list(m2s)) {
        if (s == "half") cfg.m2.push_back(bench::M2Mode::Half);
        else if (s == "full") cfg.m2.push_back(bench::M2Mode::Full);
        else throw UsageError("bad --m2 value '" + s + "' (expected half or full)");
      }
      std::tie(cfg.seed_first, cfg.seed_last) = parse_seed_range(seeds);
      cfg.variants.clear();
      for (const auto& s : split_list(variants)) cfg.variants.push_back(variant_from_string(s));
      cfg.difficulty = difficulty_from_string(bdiff);
      if (beps >= 0) cfg.eps = beps;
      if (bmax_iter > 0) cfg.max_iter = bmax_iter;
      cfg.threads = threads;

      const bench::SuiteResult res = bench::run_suite(cfg);
      const fs::path dir(bout);
      write_file(dir / "results.csv", bench::to_csv(res.rows));
      write_file(dir / "results.json", bench::to_json(res));
      std::printf("runs %zu  converged %.1f%%  median t1 %.3f ms\n", res.rows.size(), 100.0 * res.success_rate(),
                  res.median_t1_ms().value_or(0.0));
      std::printf("wrote %s\n", (dir / "results.csv").c_str());
      return res.success_rate() == 1.0 ? kOk : kNotConverged;
    }
    if (*report) {
      const auto a = bench::from_csv(read_file(ra));
      const auto b = bench::from_csv(read_file(rb));
      const auto rp = bench::record_plot(a, b, bench::metric_from_string(metric));
      write_file(rout, bench::to_csv(rp));
      int better_a = 0, better_b = 0;
      for (const auto& e : rp) {
        if (e.rp > 0) ++better_a;
        if (e.rp < 0) ++better_b;
      }
      std::printf("%zu examples: A better %d, B better %d, equal %zu\n", rp.size(), better_a, better_b,
                  rp.size() - better_a - better_b);
      return kOk;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const InstanceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const InfeasibleStartError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNotConverged;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sobundle/driver.hpp"

namespace sobundle::bench {

/// Evaluation counts entering the cost metric.
struct CostInputs {
  std::uint64_t f = 0, g = 0, G = 0;     // objective values, subgradients, Hessians
  std::uint64_t F = 0, gh = 0, Gh = 0;   // same for the constraint
  int N = 0;
  int nlc = 0;  // 1 when a nonlinear constraint is present
};

/// f + 3g + 3N G + nlc (F + 3ĝ + 3N Ĝ).
double cost(const CostInputs& in);

/// Every oracle call here returns all six quantities, so the cost is
/// (1 + nlc) Na (4 + 3N).
double cost_of_run(std::uint64_t Na, int N, int nlc = 1);

/// (t1 - t2) / t1; absent when t1 == 0.
std::optional<double> p1(std::chrono::nanoseconds t1, std::chrono::nanoseconds t2);
std::optional<double> p1(const RunRecord& r);

/// One line of a results table.
struct Row {
  std::string name;
  int N = 0;
  int m1 = 0;
  int m2 = 0;
  std::optional<std::uint64_t> seed;
  Variant variant = Variant::Reduced;
  RunStatus status = RunStatus::MaxIter;
  int Nit = 0;
  std::uint64_t Na = 0;
  double f = 0;
  double F = 0;
  double w = 0;
  double t1_ms = 0;
  double t2_ms = 0;
  std::optional<double> p1;
  std::optional<int> n_active;
};

/// Number of constraint pieces j with |F_j(x) - F(x)| <= tol, if the
/// constraint is a max of smooth pieces.
std::optional<int> near_active_count(const Problem& problem, const Vector& x, double tol = 1e-3);

Row make_row(const Problem& problem, const RunRecord& r);

enum class Suite { Examples, Pwq };
enum class M2Mode { Half, Full };
const char* to_string(Suite s);
Suite suite_from_string(const std::string& s);

struct SuiteConfig {
  Suite suite = Suite::Examples;
  std::vector<int> N{20};
  std::vector<M2Mode> m2{M2Mode::Half};
  std::uint64_t seed_first = 1;
  std::uint64_t seed_last = 1;
  std::vector<Variant> variants{Variant::Reduced};
  Difficulty difficulty = Difficulty::Easy;
  std::optional<double> eps;  // default: 1e-5 for examples, 1e-3 for pwq
  std::optional<int> max_iter;  // default: Params default for examples, 2000 for pwq
  Params base;
  int threads = 1;
};

struct SuiteResult {
  std::vector<Row> rows;  // sorted by (N, name, seed, variant)

  double success_rate() const;
  std::optional<double> median_t1_ms() const;
  std::optional<double> median_Nit() const;
};

/// Runs every (problem, variant) pair of the grid. A run that throws is
/// recorded with its error status; the suite continues.
SuiteResult run_suite(const SuiteConfig& config);

/// Problems of a suite, in a fixed order.
std::vector<Problem> suite_problems(const SuiteConfig& config);

void sort_rows(std::vector<Row>& rows);

std::string to_csv(const std::vector<Row>& rows);
std::vector<Row> from_csv(const std::string& text);
std::string to_json(const SuiteResult& result);

enum class Metric { Cost, Nit, T1 };
Metric metric_from_string(const std::string& s);
const char* to_string(Metric m);
double metric_value(const Row& r, Metric m);

struct RpEntry {
  std::string name;
  int N = 0;
  double rp = 0;  // s(B) - s(A); positive means A is better
};

/// rp per example, sorted by dimension. Throws Error naming the keys
/// present in only one of the series.
std::vector<RpEntry> record_plot(const std::vector<Row>& a, const std::vector<Row>& b, Metric metric);
std::string to_csv(const std::vector<RpEntry>& rp);

}  // namespace sobundle::bench

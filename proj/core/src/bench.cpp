#include "sobundle/bench.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace sobundle::bench {

double cost(const CostInputs& in) {
  const double N3 = 3.0 * in.N;
  const double obj = double(in.f) + 3.0 * double(in.g) + N3 * double(in.G);
  const double con = double(in.F) + 3.0 * double(in.gh) + N3 * double(in.Gh);
  return obj + in.nlc * con;
}

double cost_of_run(std::uint64_t Na, int N, int nlc) {
  return (1.0 + nlc) * double(Na) * (4.0 + 3.0 * N);
}

std::optional<double> p1(std::chrono::nanoseconds t1, std::chrono::nanoseconds t2) {
  if (t1.count() <= 0) return std::nullopt;
  return double((t1 - t2).count()) / double(t1.count());
}

std::optional<double> p1(const RunRecord& r) { return p1(r.t1, r.t2); }

std::optional<int> near_active_count(const Problem& problem, const Vector& x, double tol) {
  const auto* mos = dynamic_cast<const MaxOfSmooth*>(problem.constraint.get());
  if (!mos || x.size() != problem.n) return std::nullopt;
  const Vector vals = mos->piece_values(x);
  const double F = vals.maxCoeff();
  return static_cast<int>(((F - vals.array()).abs() <= tol).count());
}

Row make_row(const Problem& problem, const RunRecord& r) {
  Row row;
  row.name = problem.name;
  row.N = problem.n;
  row.m1 = problem.m1;
  row.m2 = problem.m2;
  row.seed = problem.seed;
  row.variant = r.variant;
  row.status = r.status;
  row.Nit = r.Nit;
  row.Na = r.Na;
  row.f = r.f_final;
  row.F = r.F_final;
  row.w = r.w_final;
  row.t1_ms = std::chrono::duration<double, std::milli>(r.t1).count();
  row.t2_ms = std::chrono::duration<double, std::milli>(r.t2).count();
  row.p1 = p1(r);
  row.n_active = near_active_count(problem, r.x_final);
  return row;
}

const char* to_string(Suite s) { return s == Suite::Examples ? "examples" : "pwq"; }

Suite suite_from_string(const std::string& s) {
  if (s == "examples") return Suite::Examples;
  if (s == "pwq") return Suite::Pwq;
  throw Error("unknown suite '" + s + "' (expected examples or pwq)");
}

namespace {

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

auto row_key(const Row& r) {
  return std::make_tuple(r.N, r.name, r.seed.value_or(0), static_cast<int>(r.variant));
}

}  // namespace

double SuiteResult::success_rate() const {
  if (rows.empty()) return 0.0;
  const auto ok = std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.status == RunStatus::Converged; });
  return double(ok) / double(rows.size());
}

std::optional<double> SuiteResult::median_t1_ms() const {
  std::vector<double> v;
  for (const Row& r : rows) v.push_back(r.t1_ms);
  return median(std::move(v));
}

std::optional<double> SuiteResult::median_Nit() const {
  std::vector<double> v;
  for (const Row& r : rows) v.push_back(r.Nit);
  return median(std::move(v));
}

void sort_rows(std::vector<Row>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return row_key(a) < row_key(b); });
}

std::vector<Problem> suite_problems(const SuiteConfig& c) {
  std::vector<Problem> out;
  if (c.suite == Suite::Examples) {
    for (const char* name : {"e1", "e2"}) out.push_back(*builtin_problem(name));
    return out;
  }
  if (c.seed_last < c.seed_first) throw Error("suite: empty seed range");
  for (int N : c.N) {
    const int m1 = std::max(1, N / 10);
    for (M2Mode mode : c.m2) {
      const int m2 = mode == M2Mode::Half ? std::max(1, N / 2) : N;
      for (std::uint64_t s = c.seed_first; s <= c.seed_last; ++s)
        out.push_back(gen_piecewise_quadratic(s, N, m1, m2, c.difficulty));
    }
  }
  return out;
}

SuiteResult run_suite(const SuiteConfig& c) {
  const std::vector<Problem> problems = suite_problems(c);
  Params base = c.base;
  base.eps = c.eps.value_or(c.suite == Suite::Examples ? 1e-5 : 1e-3);
  if (c.max_iter) base.max_iter = *c.max_iter;
  else if (c.suite == Suite::Pwq) base.max_iter = 2000;

  struct Job {
    const Problem* problem;
    Variant variant;
  };
  std::vector<Job> jobs;
  for (const Problem& p : problems)
    for (Variant v : c.variants) jobs.push_back({&p, v});

  std::vector<Row> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      Params prm = base;
      prm.variant = jobs[i].variant;
      const Problem& p = *jobs[i].problem;
      try {
        rows[i] = make_row(p, run(p, prm));
      } catch (const std::exception& e) {
        RunRecord r;
        r.variant = prm.variant;
        r.status = RunStatus::SubproblemFail;
        r.x_final = p.x0;
        r.message = e.what();
        rows[i] = make_row(p, r);
        rows[i].n_active.reset();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(c.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  SuiteResult res;
  res.rows = std::move(rows);
  sort_rows(res.rows);
  return res;
}

// CSV

namespace {

const char* kHeader = "name,N,m1,m2,seed,variant,status,Nit,Na,f,F,w,t1_ms,t2_ms,p1,n_active";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* field) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    // stod rejects "inf"/"nan" spellings on some platforms only partially
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(std::string("csv: bad number in column ") + field + ": '" + s + "'");
  }
}

long long parse_int(const std::string& s, const char* field) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(std::string("csv: bad integer in column ") + field + ": '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const char* field) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || (!s.empty() && s[0] == '-')) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(std::string("csv: bad unsigned integer in column ") + field + ": '" + s + "'");
  }
}

}  // namespace

std::string to_csv(const std::vector<Row>& rows) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const Row& r : rows) {
    if (r.name.find_first_of(",\n") != std::string::npos) throw Error("csv: name contains a separator: " + r.name);
    os << r.name << ',' << r.N << ',' << r.m1 << ',' << r.m2 << ',';
    if (r.seed) os << *r.seed;
    os << ',' << to_string(r.variant) << ',' << to_string(r.status) << ',' << r.Nit << ',' << r.Na << ','
       << fmt(r.f) << ',' << fmt(r.F) << ',' << fmt(r.w) << ',' << fmt(r.t1_ms) << ',' << fmt(r.t2_ms) << ',';
    if (r.p1) os << fmt(*r.p1);
    os << ',';
    if (r.n_active) os << *r.n_active;
    os << '\n';
  }
  return os.str();
}

std::vector<Row> from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw Error("csv: unexpected header '" + line + "'");
  std::vector<Row> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line, ',');
    if (f.size() != 16) throw Error("csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                                    " fields, expected 16");
    Row r;
    r.name = f[0];
    r.N = static_cast<int>(parse_int(f[1], "N"));
    r.m1 = static_cast<int>(parse_int(f[2], "m1"));
    r.m2 = static_cast<int>(parse_int(f[3], "m2"));
    if (!f[4].empty()) r.seed = parse_u64(f[4], "seed");
    r.variant = variant_from_string(f[5]);
    r.status = run_status_from_string(f[6]);
    r.Nit = static_cast<int>(parse_int(f[7], "Nit"));
    r.Na = parse_u64(f[8], "Na");
    r.f = parse_double(f[9], "f");
    r.F = parse_double(f[10], "F");
    r.w = parse_double(f[11], "w");
    r.t1_ms = parse_double(f[12], "t1_ms");
    r.t2_ms = parse_double(f[13], "t2_ms");
    if (!f[14].empty()) r.p1 = parse_double(f[14], "p1");
    if (!f[15].empty()) r.n_active = static_cast<int>(parse_int(f[15], "n_active"));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string to_json(const SuiteResult& result) {
  using nlohmann::json;
  json runs = json::array();
  for (const Row& r : result.rows) {
    json j{{"name", r.name},   {"N", r.N},   {"m1", r.m1},   {"m2", r.m2},
           {"variant", to_string(r.variant)}, {"status", to_string(r.status)},
           {"Nit", r.Nit},     {"Na", r.Na}, {"f", r.f},     {"F", r.F},
           {"w", r.w},         {"t1_ms", r.t1_ms}, {"t2_ms", r.t2_ms}};
    j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    j["p1"] = r.p1 ? json(*r.p1) : json(nullptr);
    j["n_active"] = r.n_active ? json(*r.n_active) : json(nullptr);
    runs.push_back(std::move(j));
  }
  json summary{{"runs", result.rows.size()}, {"success_rate", result.success_rate()}};
  const auto mt = result.median_t1_ms();
  const auto mn = result.median_Nit();
  summary["median_t1_ms"] = mt ? json(*mt) : json(nullptr);
  summary["median_Nit"] = mn ? json(*mn) : json(nullptr);
  return json{{"summary", summary}, {"runs", runs}}.dump(2);
}

Metric metric_from_string(const std::string& s) {
  if (s == "c") return Metric::Cost;
  if (s == "nit") return Metric::Nit;
  if (s == "t1") return Metric::T1;
  throw Error("unknown metric '" + s + "' (expected c, nit or t1)");
}

const char* to_string(Metric m) {
  switch (m) {
    case Metric::Cost: return "c";
    case Metric::Nit: return "nit";
    case Metric::T1: return "t1";
  }
  return "?";
}

double metric_value(const Row& r, Metric m) {
  switch (m) {
    case Metric::Cost: return cost_of_run(r.Na, r.N, 1);
    case Metric::Nit: return r.Nit;
    case Metric::T1: return r.t1_ms;
  }
  return 0;
}

std::vector<RpEntry> record_plot(const std::vector<Row>& a, const std::vector<Row>& b, Metric metric) {
  auto index = [](const std::vector<Row>& rows, const char* which) {
    std::map<std::string, const Row*> m;
    for (const Row& r : rows)
      if (!m.emplace(r.name, &r).second) throw Error(std::string("record plot: duplicate key '") + r.name + "' in series " + which);
    return m;
  };
  const auto ia = index(a, "A");
  const auto ib = index(b, "B");

  std::vector<std::string> only_a, only_b;
  for (const auto& [k, _] : ia)
    if (!ib.count(k)) only_a.push_back(k);
  for (const auto& [k, _] : ib)
    if (!ia.count(k)) only_b.push_back(k);
  if (!only_a.empty() || !only_b.empty()) {
    std::ostringstream os;
    os << "record plot: series cover different examples;";
    if (!only_a.empty()) {
      os << " only in A:";
      for (const auto& k : only_a) os << ' ' << k;
      if (!only_b.empty()) os << ';';
    }
    if (!only_b.empty()) {
      os << " only in B:";
      for (const auto& k : only_b) os << ' ' << k;
    }
    throw Error(os.str());
  }

  std::vector<RpEntry> out;
  for (const auto& [k, ra] : ia) {
    const Row* rb = ib.at(k);
    out.push_back({k, ra->N, metric_value(*rb, metric) - metric_value(*ra, metric)});
  }
  std::stable_sort(out.begin(), out.end(), [](const RpEntry& x, const RpEntry& y) {
    return std::tie(x.N, x.name) < std::tie(y.N, y.name);
  });
  return out;
}

std::string to_csv(const std::vector<RpEntry>& rp) {
  std::ostringstream os;
  os << "name,N,rp\n";
  for (const RpEntry& e : rp) os << e.name << ',' << e.N << ',' << fmt(e.rp) << '\n';
  return os.str();
}

}  // namespace sobundle::bench

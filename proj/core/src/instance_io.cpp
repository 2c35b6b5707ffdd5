#include "sobundle/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sobundle {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "sobundle-instance";

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json pieces_to_json(const MaxOfSmooth& oracle) {
  json out = json::array();
  for (std::size_t i = 0; i < oracle.pieces().size(); ++i) {
    const SmoothPiece& p = oracle.pieces()[i];
    json j = {{"alpha", p.alpha()}, {"a", to_json(p.a())}, {"center", to_json(p.center())},
              {"A", to_json(p.A())}};
    if (oracle.weights()[i] != 1.0) j["weight"] = oracle.weights()[i];
    out.push_back(std::move(j));
  }
  return out;
}

const MaxOfSmooth& as_max_of_smooth(const std::shared_ptr<const Oracle>& o, const char* which) {
  auto* m = dynamic_cast<const MaxOfSmooth*>(o.get());
  if (m == nullptr)
    throw InstanceError(std::string("save_instance: ") + which +
                        " is not a max of quadratic pieces and cannot be serialized");
  return *m;
}

// Field access with path-qualified diagnostics.
class Reader {
public:
  explicit Reader(std::string path) : path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw InstanceError("instance field '" + path_ + "': " + msg);
  }

  const json& field(const json& obj, const std::string& key) const {
    if (!obj.is_object()) fail("expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) Reader(join(key)).fail("missing");
    return *it;
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string index(std::size_t i) const { return path_ + "[" + std::to_string(i) + "]"; }
  const std::string& path() const { return path_; }

  double number(const json& v) const {
    if (!v.is_number()) fail("expected a number");
    return v.get<double>();
  }

  long integer(const json& v) const {
    if (!v.is_number_integer()) fail("expected an integer");
    return v.get<long>();
  }

  Vector vector(const json& v, Eigen::Index n) const {
    if (!v.is_array()) fail("expected an array");
    if (static_cast<Eigen::Index>(v.size()) != n)
      fail("dimension mismatch: expected " + std::to_string(n) + " entries, got " +
           std::to_string(v.size()));
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = Reader(index(i)).number(v[i]);
    return out;
  }

  Matrix matrix(const json& v, Eigen::Index rows, Eigen::Index cols) const {
    if (!v.is_array()) fail("expected an array of rows");
    if (static_cast<Eigen::Index>(v.size()) != rows)
      fail("dimension mismatch: expected " + std::to_string(rows) + " rows, got " +
           std::to_string(v.size()));
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) out.row(i) = Reader(index(i)).vector(v[i], cols);
    return out;
  }

private:
  std::string path_;
};

std::shared_ptr<const Oracle> pieces_from_json(const json& arr, const std::string& name, int n) {
  Reader r(name);
  if (!arr.is_array() || arr.empty()) r.fail("expected a non-empty array of pieces");
  std::vector<SmoothPiece> pieces;
  std::vector<double> weights;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader pr(r.index(i));
    const json& pj = arr[i];
    const double alpha = Reader(pr.join("alpha")).number(pr.field(pj, "alpha"));
    Vector a = Reader(pr.join("a")).vector(pr.field(pj, "a"), n);
    Vector c = Reader(pr.join("center")).vector(pr.field(pj, "center"), n);
    Matrix A = Reader(pr.join("A")).matrix(pr.field(pj, "A"), n, n);
    if (A != A.transpose()) Reader(pr.join("A")).fail("matrix is not symmetric");
    double w = 1.0;
    if (pj.contains("weight")) {
      w = Reader(pr.join("weight")).number(pj["weight"]);
      if (!(w > 0)) Reader(pr.join("weight")).fail("weight must be positive");
    }
    pieces.emplace_back(alpha, std::move(a), std::move(A), std::move(c));
    weights.push_back(w);
  }
  return std::make_shared<MaxOfSmooth>(std::move(pieces), std::move(weights));
}

}  // namespace

std::string instance_to_string(const Problem& p) {
  const MaxOfSmooth& f = as_max_of_smooth(p.objective, "objective");
  const MaxOfSmooth& F = as_max_of_smooth(p.constraint, "constraint");
  json j;
  j["format"] = kFormat;
  j["version"] = 1;
  j["name"] = p.name;
  j["n"] = p.n;
  j["m1"] = static_cast<int>(f.pieces().size());
  j["m2"] = static_cast<int>(F.pieces().size());
  if (p.seed) j["seed"] = *p.seed;
  if (p.difficulty) j["difficulty"] = to_string(*p.difficulty);
  j["objective_pieces"] = pieces_to_json(f);
  j["constraint_pieces"] = pieces_to_json(F);
  j["B"] = to_json(p.B);
  j["b"] = to_json(p.b);
  j["x0"] = to_json(p.x0);
  return j.dump(1) + "\n";
}

Problem instance_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.what() carries "at line L, column C"
    throw InstanceError(std::string("instance parse error: ") + e.what());
  }
  Reader root("");
  if (!j.is_object()) throw InstanceError("instance parse error: top level must be an object");
  if (j.contains("format") && j["format"] != kFormat)
    throw InstanceError("instance field 'format': unexpected value");

  Problem p;
  p.n = static_cast<int>(Reader("n").integer(root.field(j, "n")));
  if (p.n < 1) Reader("n").fail("must be positive");
  p.name = j.value("name", std::string("instance"));
  p.objective = pieces_from_json(root.field(j, "objective_pieces"), "objective_pieces", p.n);
  p.constraint = pieces_from_json(root.field(j, "constraint_pieces"), "constraint_pieces", p.n);
  p.m1 = static_cast<int>(j["objective_pieces"].size());
  p.m2 = static_cast<int>(j["constraint_pieces"].size());
  if (j.contains("m1") && Reader("m1").integer(j["m1"]) != p.m1)
    Reader("m1").fail("dimension mismatch with objective_pieces");
  if (j.contains("m2") && Reader("m2").integer(j["m2"]) != p.m2)
    Reader("m2").fail("dimension mismatch with constraint_pieces");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) Reader("seed").fail("expected a non-negative integer");
    p.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("difficulty")) {
    try {
      p.difficulty = difficulty_from_string(j["difficulty"].get<std::string>());
    } catch (const std::exception& e) {
      Reader("difficulty").fail(e.what());
    }
  }

  const json& bj = root.field(j, "b");
  if (!bj.is_array()) Reader("b").fail("expected an array");
  const auto rows = static_cast<Eigen::Index>(bj.size());
  p.b = Reader("b").vector(bj, rows);
  p.B = Reader("B").matrix(root.field(j, "B"), rows, p.n);
  p.x0 = Reader("x0").vector(root.field(j, "x0"), p.n);

  try {
    p.check_start();
  } catch (const InfeasibleStartError& e) {
    throw InstanceError(e.what());
  }
  return p;
}

void save_instance(const Problem& problem, const std::filesystem::path& path) {
  const std::string text = instance_to_string(problem);
  std::ofstream os(path);
  if (!os) throw InstanceError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw InstanceError("write to '" + path.string() + "' failed");
}

Problem load_instance(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InstanceError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return instance_from_string(ss.str());
}

}  // namespace sobundle

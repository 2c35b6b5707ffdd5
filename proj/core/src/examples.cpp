#include <algorithm>

#include "sobundle/problem.hpp"

namespace sobundle {

namespace {

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

SmoothPiece disk(double cx, double cy, double sign) {
  // sign * ((x - c)^T (x - c) - 1)
  return SmoothPiece(-sign, Vector::Zero(2), sign * 2.0 * Matrix::Identity(2, 2), vec2(cx, cy));
}

SmoothPiece parabola() {
  // (x1 - 1)^2 - x2 - 1 expanded around (1, 0)
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 2.0;
  return SmoothPiece(-1.0, vec2(0.0, -1.0), A, vec2(1.0, 0.0));
}

std::shared_ptr<const Oracle> e1_objective() {
  std::vector<SmoothPiece> f;
  f.emplace_back(0.0, Vector::Zero(2), 2.0 * Matrix::Identity(2, 2), vec2(-0.5, -1.5));
  return std::make_shared<MaxOfSmooth>(std::move(f));
}

}  // namespace

Problem example_e1() {
  Problem p;
  p.name = "E1";
  p.n = 2;
  p.objective = e1_objective();
  p.constraint = std::make_shared<MaxOfSmooth>(std::vector<SmoothPiece>{disk(0, 0, 1), disk(1, -1, 1)});
  p.B = Matrix::Zero(0, 2);
  p.b = Vector::Zero(0);
  p.x0 = vec2(0.5, -0.5);
  p.m1 = 1;
  p.m2 = 2;
  return p;
}

Problem example_e2(E2Form form) {
  Problem p;
  p.n = 2;
  p.objective = e1_objective();
  if (form == E2Form::Flat) {
    p.name = "E2";
    p.constraint = std::make_shared<MaxOfSmooth>(
        std::vector<SmoothPiece>{disk(0, 0, -1), disk(1, -1, -1), parabola()});
  } else {
    p.name = "E2-nested";
    auto inner = std::make_shared<MaxOfSmooth>(std::vector<SmoothPiece>{disk(0, 0, 1), disk(1, -1, 1)});
    auto outer = std::make_shared<MaxOfSmooth>(std::vector<SmoothPiece>{parabola()});
    p.constraint = std::make_shared<FunctionOracle>([inner, outer](const Vector& x) {
      OracleValue a = inner->eval(x);
      a.value = -a.value;
      a.grad = -a.grad;
      a.hess = -a.hess;
      OracleValue c = outer->eval(x);
      return c.value > a.value ? c : a;
    });
  }
  p.B = Matrix::Zero(0, 2);
  p.b = Vector::Zero(0);
  // outside both disks, above the parabola: F(1, 0.5) = -0.25
  p.x0 = vec2(1.0, 0.5);
  p.m1 = 1;
  p.m2 = 3;
  return p;
}

std::vector<std::string> builtin_problem_names() { return {"e1", "e2", "e2-nested"}; }

std::optional<Problem> builtin_problem(const std::string& name) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "e1") return example_e1();
  if (key == "e2") return example_e2(E2Form::Flat);
  if (key == "e2-nested") return example_e2(E2Form::Nested);
  return std::nullopt;
}

}  // namespace sobundle

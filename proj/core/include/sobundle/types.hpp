#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sobundle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Which search-direction problem the solver builds each iteration.
///  - L:       linear cuts only (the QP with all constraint curvature set to 0)
///  - Full:    one quadratic constraint per bundle element
///  - Reduced: linear cuts coupled through a single quadratic constraint
enum class Variant { L, Full, Reduced };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace sobundle

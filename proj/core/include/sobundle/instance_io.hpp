#pragma once

#include <filesystem>
#include <string>

#include "sobundle/problem.hpp"

namespace sobundle {

class InstanceError : public Error {
public:
  using Error::Error;
};

/// Instance files are JSON documents:
///
///   { "format": "sobundle-instance", "version": 1, "name": ...,
///     "n": .., "m1": .., "m2": .., "seed": .., "difficulty": ..,
///     "objective_pieces":  [ {"alpha", "a", "center", "A", "weight"?}, ... ],
///     "constraint_pieces": [ ... ],
///     "B": [[...], ...], "b": [...], "x0": [...] }
///
/// Matrices are stored row-major with full symmetric storage. Doubles are
/// written in shortest round-trip form, so save/load is bit-exact.
///
/// Only problems whose oracles are MaxOfSmooth can be saved.
std::string instance_to_string(const Problem& problem);
Problem instance_from_string(const std::string& text);

void save_instance(const Problem& problem, const std::filesystem::path& path);
Problem load_instance(const std::filesystem::path& path);

}  // namespace sobundle

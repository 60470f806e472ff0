#pragma once

#include <stdexcept>
#include <string>

namespace vecadvect {

// Bad user input: malformed config, mismatched grids, invalid parameters.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime rejection by a numerical safety check (CFL bound, nonzero mean
// where a zero mean is required, exploding path gradients, ...).
struct NumericalGuard : std::runtime_error {
  explicit NumericalGuard(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vecadvect

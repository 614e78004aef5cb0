#pragma once

#include <stdexcept>
#include <string>

namespace vitas {

/// Bad input data or configuration: malformed config files, out-of-range
/// indices, violated preconditions (l = 0, l > 6 for exhaustive search,
/// infeasible budgets, degenerate rank inputs). Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vitas

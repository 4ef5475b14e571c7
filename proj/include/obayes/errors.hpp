#pragma once

#include <stdexcept>
#include <string>

namespace obayes {

/// Malformed input: bad CSV cells, inconsistent dimensions, invalid options.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine failed to reach its contract (non-convergence,
/// non-SPD matrix, degenerate data such as SSE0 = 0).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The exhaustive follow-up design space does not fit in a 64-bit count.
class DesignSpaceOverflow : public std::runtime_error {
 public:
  explicit DesignSpaceOverflow(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace obayes

#pragma once

#include <stdexcept>
#include <string>

namespace qfield {

// Violated model assumption or operation precondition. The message names the
// assumption (e.g. "requires r_2+1-2|rho|>0") so callers can report it as-is.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical safeguard tripped (divergent series, runaway rejection loop).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qfield

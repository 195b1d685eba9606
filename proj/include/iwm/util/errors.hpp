#pragma once

#include <stdexcept>
#include <string>

namespace iwm {

// Violated preconditions and shape mismatches.
class ContractViolation : public std::invalid_argument {
public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// NaN/inf detected where a finite value is required (losses, gradients).
class NonFiniteError : public std::runtime_error {
public:
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace iwm

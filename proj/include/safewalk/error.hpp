#pragma once

#include <stdexcept>
#include <string>

namespace safewalk {

/// Thrown when a caller breaks an operation's precondition (shape, range).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace safewalk

#pragma once

#include <stdexcept>
#include <string>

namespace impostor {

/// Raised when a caller violates an operation's precondition (shape, range,
/// finiteness). Carries no recovery information; the input is simply wrong.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal computation cannot proceed on otherwise valid input
/// (e.g. all impostors collapse to the origin before normalization).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void contract_failure(const std::string& what) {
  throw ContractError(what);
}
}  // namespace detail

inline void require(bool condition, const char* what) {
  if (!condition) detail::contract_failure(what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) detail::contract_failure(what);
}

}  // namespace impostor

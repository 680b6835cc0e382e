#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace farey {

struct FareyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a map (x = 0 for the Gauss map, points outside Omega, ...).
struct DomainError : FareyError {
  using FareyError::FareyError;
};

// A non-terminated expansion was asked for a digit beyond its budget.
struct BudgetExhausted : FareyError {
  std::size_t index;
  explicit BudgetExhausted(std::size_t k)
      : FareyError("digit budget exhausted at a_" + std::to_string(k)), index(k) {}
};

// An enclosure was too wide to decide a boundary comparison.
struct PrecisionError : FareyError {
  using FareyError::FareyError;
};

// No entry into the region within the configured step cap.
struct NonRecurrent : FareyError {
  std::uint64_t examined;
  std::uint64_t from_step;
  NonRecurrent(std::uint64_t work, std::uint64_t from)
      : FareyError("presumed non-recurrent: no entry after " + std::to_string(work) +
                   " units of work from step " + std::to_string(from)),
        examined(work),
        from_step(from) {}
};

struct ParseError : FareyError {
  std::size_t position;
  ParseError(const std::string& what, std::size_t pos)
      : FareyError(what + " at position " + std::to_string(pos)), position(pos) {}
};

struct InvalidDigits : FareyError {
  using FareyError::FareyError;
};

}  // namespace farey

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zrlab {

// Base for everything thrown on purpose by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed configs, empty grids, unknown keys.
struct UsageError : Error {
  using Error::Error;
};

// Mathematically invalid request: negative rates, rho < 0, t <= 0, f < 0, ...
struct DomainError : Error {
  using Error::Error;
};

// A resource cap was hit (state space too large, subspace cap, ...).
struct CapError : Error {
  CapError(const std::string& what, std::uint64_t count)
      : Error(what), count(count) {}
  std::uint64_t count = 0;
};

// The tabulated rate range (or a truncation cut) is too short for the request.
struct TableError : Error {
  using Error::Error;
};

// An iterative solver did not reach its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

// A scientific check failed; `witness` holds a JSON dump of the offending case.
struct ViolationError : Error {
  ViolationError(const std::string& what, std::string witness_json)
      : Error(what), witness(std::move(witness_json)) {}
  std::string witness;
};

}  // namespace zrlab

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace springmass {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (m <= 0, L_r <= 0, dt <= 0, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A handle no longer resolves to a live object.
class StaleHandleError : public Error {
 public:
  using Error::Error;
};

/// Operation is illegal in the current lifecycle state (store locked while
/// the loop runs, start on a stopped controller, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value detected in simulation state; the step was aborted.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::uint32_t mass_slot)
      : Error(what), mass_slot_(mass_slot) {}
  std::uint32_t mass_slot() const noexcept { return mass_slot_; }

 private:
  std::uint32_t mass_slot_;
};

/// Malformed input file. `location` is a byte offset for binary formats and
/// a 1-based line number for text formats.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

}  // namespace springmass

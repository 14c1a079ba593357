#pragma once

#include <stdexcept>
#include <string>

namespace ipareg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Near-zero divisor in a gain or Newton step; carries the iteration/cycle
// index when known (-1 otherwise).
struct DivisorTooSmall : Error {
  explicit DivisorTooSmall(double value, long index = -1)
      : Error("divisor too small: |" + std::to_string(value) + "| at index " +
              std::to_string(index)),
        value(value),
        index(index) {}
  double value;
  long index;
};

struct InvalidParams : Error {
  using Error::Error;
};

struct WindowTooLarge : Error {
  using Error::Error;
};

struct EmptyRange : Error {
  using Error::Error;
};

struct EmptyList : Error {
  using Error::Error;
};

struct InvalidRate : Error {
  using Error::Error;
};

struct InvalidRange : Error {
  using Error::Error;
};

struct UnstableQueue : Error {
  using Error::Error;
};

struct EventStall : Error {
  using Error::Error;
};

struct InconsistentTiming : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Wraps a plant failure with the control cycle it happened in.
struct PlantCycleError : Error {
  PlantCycleError(int cycle, const std::string& what)
      : Error("cycle " + std::to_string(cycle) + ": " + what), cycle(cycle) {}
  int cycle;
};

}  // namespace ipareg

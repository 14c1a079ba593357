#pragma once

#include <cmath>

#include "ipareg/errors.hpp"

namespace ipareg {

/// Closed interval [lo, hi] used to constrain the control variable.
struct Interval {
  double lo;
  double hi;

  Interval(double lo, double hi) : lo(lo), hi(hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi))
      throw InvalidParams("interval requires finite lo < hi");
  }

  bool contains(double u) const { return u >= lo && u <= hi; }
};

/// Projection onto the interval: identity inside, clamp outside. Idempotent.
inline double project(double u, const Interval& iv) {
  if (u < iv.lo) return iv.lo;
  if (u > iv.hi) return iv.hi;
  return u;
}

}  // namespace ipareg

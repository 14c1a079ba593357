#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "ipareg/errors.hpp"

namespace ipareg {

/// Running scalar statistics for one stream of cycle outputs.
struct CycleStats {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
    if (x < min) min = x;
    if (x > max) max = x;
  }

  double mean() const {
    if (count == 0) throw EmptyRange("mean of empty stats");
    return sum / static_cast<double>(count);
  }

  // Sample variance (n-1 denominator).
  double variance() const {
    if (count < 2) throw EmptyRange("variance needs count >= 2");
    const double n = static_cast<double>(count);
    return (sum_sq - sum * sum / n) / (n - 1.0);
  }

  double range() const {
    if (count == 0) throw EmptyRange("range of empty stats");
    return max - min;
  }
};

/// Mean of rows[from..to], 1-based inclusive on both ends (cycle numbering
/// starts at 1 throughout).
inline double mean_over(const std::vector<double>& rows, std::size_t from,
                        std::size_t to) {
  if (from < 1 || to < from || to > rows.size())
    throw EmptyRange("mean_over: invalid 1-based range");
  double s = 0.0;
  for (std::size_t i = from; i <= to; ++i) s += rows[i - 1];
  return s / static_cast<double>(to - from + 1);
}

}  // namespace ipareg

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace redrug::detail {

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double total = 0.0;
  for (double x : xs) total += std::exp(x - hi);
  return hi + std::log(total);
}

}  // namespace redrug::detail

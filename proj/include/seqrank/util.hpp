#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace seqrank {

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> vals) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : vals) hi = std::max(hi, v);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double acc = 0.0;
  for (double v : vals) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

constexpr double kLog10E = 0.434294481903251827651128918917;  // log10(e)

inline double nat_to_log10(double x) { return x * kLog10E; }

}  // namespace seqrank

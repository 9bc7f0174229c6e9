#ifndef GEP_LOGSPACE_HPP
#define GEP_LOGSPACE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace gep {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

// log(exp(a) + exp(b)); -inf is the additive identity.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return kLogZero;
  const double hi = *std::max_element(values.begin(), values.end());
  if (hi == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

// Tie test for scores accumulated along different paths.
inline bool log_equal(double a, double b, double tol = 1e-12) {
  if (a == b) return true;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(a));
}

}  // namespace gep

#endif  // GEP_LOGSPACE_HPP

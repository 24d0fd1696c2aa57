#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's numeric code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace detcal::testing {

/// Quadratic-time binned calibration error: for every bin, scan the whole
/// list for members of ((m-1)/M, m/M] (0.0 joins bin 1).
inline double brute_force_binned_error(std::span<const double> values,
                                       std::span<const double> outcomes, int bins) {
  const auto n = static_cast<double>(values.size());
  double total = 0.0;
  for (int m = 1; m <= bins; ++m) {
    const double lo = static_cast<double>(m - 1) / bins;
    const double hi = static_cast<double>(m) / bins;
    double count = 0.0;
    double value_sum = 0.0;
    double outcome_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      const bool inside = (m == 1) ? (v >= lo && v <= hi) : (v > lo && v <= hi);
      if (!inside) continue;
      count += 1.0;
      value_sum += values[i];
      outcome_sum += outcomes[i];
    }
    if (count == 0.0) continue;
    total += count / n * std::fabs(outcome_sum / count - value_sum / count);
  }
  return total;
}

/// Central finite difference of f along coordinate i of x.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Relative error with a floor on the denominator so that two near-zero
/// values compare as equal.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / scale;
}

/// IoU of integer-cornered boxes by counting covered unit cells.
inline double pixel_count_iou(std::array<int, 4> a, std::array<int, 4> b) {
  const int x_lo = std::min(a[0], b[0]);
  const int y_lo = std::min(a[1], b[1]);
  const int x_hi = std::max(a[2], b[2]);
  const int y_hi = std::max(a[3], b[3]);
  long inter = 0;
  long uni = 0;
  for (int x = x_lo; x < x_hi; ++x) {
    for (int y = y_lo; y < y_hi; ++y) {
      const bool in_a = x >= a[0] && x < a[2] && y >= a[1] && y < a[3];
      const bool in_b = x >= b[0] && x < b[2] && y >= b[1] && y < b[3];
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Population variance of a flat list.
inline double population_variance(std::span<const double> values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(values.size());
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace detcal::testing

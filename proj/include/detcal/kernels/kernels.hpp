#pragma once

// Data-parallel inner loops behind the metric, matching and TCD code.
//
// Every kernel has a scalar reference implementation. Vector variants are
// compiled into separate translation units and picked at runtime from the
// host CPU's capabilities. All variants except abs_diff_sum are bit-identical
// to the scalar reference; abs_diff_sum reassociates the reduction.

#include <cstddef>
#include <cstdint>
#include <span>

#include "detcal/geometry.hpp"

namespace detcal::kernels {

/// Structure-of-arrays view over a set of boxes.
struct BoxColumns {
  std::span<const double> x1;
  std::span<const double> y1;
  std::span<const double> x2;
  std::span<const double> y2;

  std::size_t size() const { return x1.size(); }
};

struct KernelTable {
  const char* name;

  /// sums[c] += rows[r * cols + c] for every row r, rows visited in order.
  void (*accumulate_columns)(std::span<const double> rows, std::size_t cols,
                             std::span<double> sums);

  /// counts[c] += rows[r * cols + c] for byte-valued rows.
  void (*count_columns)(std::span<const std::uint8_t> rows, std::size_t cols,
                        std::span<std::uint64_t> counts);

  /// Sum of |a[i] - b[i]|.
  double (*abs_diff_sum)(std::span<const double> a, std::span<const double> b);

  /// out[i] = scale * sign(a[i] - b[i]), with sign(0) = 0.
  void (*scaled_sign_diff)(std::span<const double> a,
                           std::span<const double> b, double scale,
                           std::span<double> out);

  /// out[j] = iou(anchor, boxes[j]).
  void (*iou_one_to_many)(const BBox& anchor, const BoxColumns& boxes,
                          std::span<double> out);

  /// Zero-based bin of each value in [0, 1] for `bins` equal-width bins, bin m
  /// covering (m/bins, (m+1)/bins] and 0.0 landing in bin 0.
  void (*bin_indices)(std::span<const double> values, int bins,
                      std::span<std::int32_t> out);
};

const KernelTable& scalar();

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2();

/// Table used by the library. Chosen once per process; setting the
/// environment variable DETCAL_SIMD=scalar forces the reference kernels.
const KernelTable& active();

/// Scalar bin assignment shared by every variant's tail loop.
inline std::int32_t bin_index(double value, int bins) {
  const double scaled = value * bins;
  // Two-sided clamp on the double avoids UB on conversion.
  double c = scaled;
  if (c < 1.0) c = 1.0;
  if (c > static_cast<double>(bins)) c = static_cast<double>(bins);
  std::int32_t m = static_cast<std::int32_t>(c);
  if (static_cast<double>(m) < c) ++m;  // ceil
  // One correction step reconciles rounding in value*bins with the
  // (m-1)/bins < value <= m/bins edge definition.
  if (m < bins && value > static_cast<double>(m) / bins) {
    ++m;
  } else if (m > 1 && value <= static_cast<double>(m - 1) / bins) {
    --m;
  }
  return m - 1;
}

}  // namespace detcal::kernels

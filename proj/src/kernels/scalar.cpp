#include "detcal/kernels/kernels.hpp"

#include <cmath>

namespace detcal::kernels {
namespace {

void accumulate_columns(std::span<const double> rows, std::size_t cols,
                        std::span<double> sums) {
  const std::size_t n_rows = cols == 0 ? 0 : rows.size() / cols;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* row = rows.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) sums[c] += row[c];
  }
}

void count_columns(std::span<const std::uint8_t> rows, std::size_t cols,
                   std::span<std::uint64_t> counts) {
  const std::size_t n_rows = cols == 0 ? 0 : rows.size() / cols;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::uint8_t* row = rows.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) counts[c] += row[c];
  }
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::fabs(a[i] - b[i]);
  return total;
}

void scaled_sign_diff(std::span<const double> a, std::span<const double> b,
                      double scale, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    const double sign = static_cast<double>((d > 0.0) - (d < 0.0));
    out[i] = scale * sign;
  }
}

void iou_one_to_many(const BBox& anchor, const BoxColumns& boxes,
                     std::span<double> out) {
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    out[j] = detail::iou_unchecked(
        anchor, BBox{boxes.x1[j], boxes.y1[j], boxes.x2[j], boxes.y2[j]});
  }
}

void bin_indices(std::span<const double> values, int bins,
                 std::span<std::int32_t> out) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = bin_index(values[i], bins);
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{
      "scalar",        accumulate_columns, count_columns,
      abs_diff_sum,    scaled_sign_diff,   iou_one_to_many,
      bin_indices,
  };
  return table;
}

}  // namespace detcal::kernels

// Compiled with -mavx2 only; the dispatcher checks CPU support before handing
// out this table. FMA is deliberately not enabled so products round exactly as
// in the scalar reference.

#include <immintrin.h>

#include <cstring>

#include "detcal/kernels/kernels.hpp"

namespace detcal::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void accumulate_columns(std::span<const double> rows, std::size_t cols,
                        std::span<double> sums) {
  const std::size_t n_rows = cols == 0 ? 0 : rows.size() / cols;
  const std::size_t vec_cols = cols - cols % kLanes;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* row = rows.data() + r * cols;
    std::size_t c = 0;
    for (; c < vec_cols; c += kLanes) {
      const __m256d acc = _mm256_loadu_pd(sums.data() + c);
      _mm256_storeu_pd(sums.data() + c,
                       _mm256_add_pd(acc, _mm256_loadu_pd(row + c)));
    }
    for (; c < cols; ++c) sums[c] += row[c];
  }
}

void count_columns(std::span<const std::uint8_t> rows, std::size_t cols,
                   std::span<std::uint64_t> counts) {
  const std::size_t n_rows = cols == 0 ? 0 : rows.size() / cols;
  const std::size_t vec_cols = cols - cols % kLanes;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::uint8_t* row = rows.data() + r * cols;
    std::size_t c = 0;
    for (; c < vec_cols; c += kLanes) {
      std::int32_t packed;
      std::memcpy(&packed, row + c, sizeof(packed));
      const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
      auto* dst = reinterpret_cast<__m256i*>(counts.data() + c);
      _mm256_storeu_si256(dst, _mm256_add_epi64(_mm256_loadu_si256(dst), wide));
    }
    for (; c < cols; ++c) counts[c] += row[c];
  }
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n = a.size();
  const std::size_t vec_n = n - n % kLanes;
  std::size_t i = 0;
  for (; i < vec_n; i += kLanes) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d < 0.0 ? -d : d;
  }
  return total;
}

void scaled_sign_diff(std::span<const double> a, std::span<const double> b,
                      double scale, std::span<double> out) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d vscale = _mm256_set1_pd(scale);
  const std::size_t n = a.size();
  const std::size_t vec_n = n - n % kLanes;
  std::size_t i = 0;
  for (; i < vec_n; i += kLanes) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_GT_OQ), one);
    const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_LT_OQ), one);
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(vscale, _mm256_sub_pd(pos, neg)));
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    out[i] = scale * static_cast<double>((d > 0.0) - (d < 0.0));
  }
}

void iou_one_to_many(const BBox& anchor, const BoxColumns& boxes,
                     std::span<double> out) {
  const __m256d ax1 = _mm256_set1_pd(anchor.x1);
  const __m256d ay1 = _mm256_set1_pd(anchor.y1);
  const __m256d ax2 = _mm256_set1_pd(anchor.x2);
  const __m256d ay2 = _mm256_set1_pd(anchor.y2);
  const __m256d area_a =
      _mm256_set1_pd((anchor.x2 - anchor.x1) * (anchor.y2 - anchor.y1));
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t n = boxes.size();
  const std::size_t vec_n = n - n % kLanes;
  std::size_t j = 0;
  for (; j < vec_n; j += kLanes) {
    const __m256d bx1 = _mm256_loadu_pd(boxes.x1.data() + j);
    const __m256d by1 = _mm256_loadu_pd(boxes.y1.data() + j);
    const __m256d bx2 = _mm256_loadu_pd(boxes.x2.data() + j);
    const __m256d by2 = _mm256_loadu_pd(boxes.y2.data() + j);
    // max/min operand order mirrors the ternaries in iou_unchecked.
    const __m256d iw = _mm256_sub_pd(_mm256_min_pd(bx2, ax2), _mm256_max_pd(bx1, ax1));
    const __m256d ih = _mm256_sub_pd(_mm256_min_pd(by2, ay2), _mm256_max_pd(by1, ay1));
    const __m256d inter = _mm256_mul_pd(iw, ih);
    const __m256d area_b =
        _mm256_mul_pd(_mm256_sub_pd(bx2, bx1), _mm256_sub_pd(by2, by1));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, area_b), inter);
    const __m256d valid = _mm256_and_pd(
        _mm256_and_pd(_mm256_cmp_pd(iw, zero, _CMP_GT_OQ),
                      _mm256_cmp_pd(ih, zero, _CMP_GT_OQ)),
        _mm256_cmp_pd(uni, zero, _CMP_GT_OQ));
    const __m256d ratio = _mm256_div_pd(inter, _mm256_blendv_pd(_mm256_set1_pd(1.0), uni, valid));
    _mm256_storeu_pd(out.data() + j, _mm256_and_pd(ratio, valid));
  }
  for (; j < n; ++j) {
    out[j] = detail::iou_unchecked(
        anchor, BBox{boxes.x1[j], boxes.y1[j], boxes.x2[j], boxes.y2[j]});
  }
}

void bin_indices(std::span<const double> values, int bins,
                 std::span<std::int32_t> out) {
  const __m256d vbins = _mm256_set1_pd(static_cast<double>(bins));
  const __m256d one = _mm256_set1_pd(1.0);
  const std::size_t n = values.size();
  const std::size_t vec_n = n - n % kLanes;
  std::size_t i = 0;
  for (; i < vec_n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(values.data() + i);
    __m256d c = _mm256_mul_pd(v, vbins);
    c = _mm256_min_pd(_mm256_max_pd(c, one), vbins);
    c = _mm256_round_pd(c, _MM_FROUND_TO_POS_INF | _MM_FROUND_NO_EXC);
    const __m256d hi = _mm256_div_pd(c, vbins);
    const __m256d lo = _mm256_div_pd(_mm256_sub_pd(c, one), vbins);
    const __m256d up = _mm256_and_pd(_mm256_cmp_pd(c, vbins, _CMP_LT_OQ),
                                     _mm256_cmp_pd(v, hi, _CMP_GT_OQ));
    const __m256d down = _mm256_andnot_pd(
        up, _mm256_and_pd(_mm256_cmp_pd(c, one, _CMP_GT_OQ),
                          _mm256_cmp_pd(v, lo, _CMP_LE_OQ)));
    c = _mm256_add_pd(c, _mm256_and_pd(up, one));
    c = _mm256_sub_pd(c, _mm256_and_pd(down, one));
    const __m128i m = _mm256_cvttpd_epi32(_mm256_sub_pd(c, one));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out.data() + i), m);
  }
  for (; i < n; ++i) out[i] = bin_index(values[i], bins);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",          accumulate_columns, count_columns,
      abs_diff_sum,    scaled_sign_diff,   iou_one_to_many,
      bin_indices,
  };
  return table;
}

}  // namespace detcal::kernels

#pragma once

// Train-time calibration loss for detectors (TCD).
//
//   d_cls = 1/K sum_k | mean_{l,r} s[l,r,k] - mean_{l,r} q[l,r,k] |
//   d_det = 1/L' sum_l 1/N_l sum_n | iou_n - shat_n |
//   loss  = (d_cls + d_det) / 2
//
// s are class confidences over L images x R output locations x K classes, q
// the matching one-hot targets (all-zero rows at background locations). The
// d_det average runs over the L' images that have at least one positive
// region; images without positives are skipped, and with no positives at all
// d_det is 0 with zero gradient. Gradients use sign(0) = 0 at the kinks.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "detcal/geometry.hpp"

namespace detcal {

/// Positive regions of one image, structure-of-arrays.
struct ImagePositives {
  std::vector<double> iou;   // overlap of predicted box with its target box
  std::vector<double> shat;  // confidence of the predicted class

  std::size_t size() const { return iou.size(); }
  bool empty() const { return iou.empty(); }
  void add(double overlap, double confidence) {
    iou.push_back(overlap);
    shat.push_back(confidence);
  }
  bool operator==(const ImagePositives&) const = default;
};

struct TcdBatch {
  std::uint32_t images = 0;     // L
  std::uint32_t locations = 0;  // R
  std::uint32_t classes = 0;    // K
  std::vector<double> confidences;    // row-major L x R x K, in [0, 1]
  std::vector<std::uint8_t> targets;  // same layout, 0/1, at most one 1 per row
  std::vector<ImagePositives> positives;  // one entry per image

  std::size_t index(std::size_t l, std::size_t r, std::size_t k) const {
    return (l * locations + r) * classes + k;
  }
  std::size_t cells() const {
    return static_cast<std::size_t>(images) * locations * classes;
  }
  /// Throws InputError describing the first violated invariant.
  void validate() const;

  bool operator==(const TcdBatch&) const = default;
};

struct TcdValueGrad {
  double d_cls = 0.0;
  double d_det = 0.0;
  double loss = 0.0;
  std::vector<double> grad_confidences;        // d loss / d s, L x R x K
  std::vector<std::vector<double>> grad_shat;  // d loss / d shat, per image
  std::vector<std::vector<double>> grad_iou;   // d loss / d iou, per image
};

double d_cls(const TcdBatch& batch);
double d_det(const TcdBatch& batch);
TcdValueGrad tcd_loss(const TcdBatch& batch);

/// Chains d loss / d iou through the predicted box coordinates.
std::array<double, 4> chain_box_gradient(double grad_iou, const BBox& predicted,
                                         const BBox& target);

}  // namespace detcal

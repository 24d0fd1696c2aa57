#pragma once

// Synthetic detector with a known calibration curve.
//
// Scores are drawn from a (rescaled) Beta distribution; each detection is
// correct with probability curve(score). Geometry is constructed rather than
// sampled: every detection occupies its own 100 px grid cell, a correct one
// sits within 1.5 px of a dedicated same-class ground-truth box (IoU >= 0.9),
// an incorrect one has no ground truth anywhere near it. Matching at
// gamma = 0.5 therefore reproduces the drawn correctness flags exactly.
//
// Randomness comes only from std::mt19937_64 (fully specified by the
// standard) with hand-written uniform/normal/gamma transforms, so a seed
// yields the same dataset with any conforming standard library.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "detcal/dataset.hpp"

namespace detcal {

inline constexpr const char* kSynthRngName = "mt19937_64";

enum class CurveKind { kIdentity, kConstantGap, kTemperature };

/// Score -> probability of being correct.
struct CalibrationCurve {
  CurveKind kind = CurveKind::kIdentity;
  double parameter = 0.0;  // gap delta, or the true temperature

  static CalibrationCurve identity() { return {}; }
  static CalibrationCurve constant_gap(double delta) {
    return {CurveKind::kConstantGap, delta};
  }
  static CalibrationCurve temperature(double t) {
    return {CurveKind::kTemperature, t};
  }

  double operator()(double score) const;
};

struct SynthSpec {
  std::size_t detections = 10000;
  int classes = 8;
  CalibrationCurve curve;
  double alpha = 1.0;  // Beta(alpha, beta) score distribution
  double beta = 1.0;
  double score_min = 0.0;  // Beta draw is rescaled to [score_min, score_max]
  double score_max = 1.0;
  std::size_t per_image = 100;
  std::uint64_t seed = 0;
};

struct SynthDataset {
  DatasetBundle bundle;
  std::vector<bool> correct;  // drawn U flag per detection
};

/// Throws ParameterError for non-positive Beta parameters, an empty or
/// inverted score range, zero classes/detections/per_image, or an invalid
/// curve parameter.
SynthDataset generate(const SynthSpec& spec);

}  // namespace detcal

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "detcal/geometry.hpp"
#include "detcal/metrics.hpp"

namespace detcal {

using ImageId = std::int64_t;

struct Detection {
  ImageId image_id = 0;
  BBox box;
  int class_id = 0;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

struct GroundTruthBox {
  ImageId image_id = 0;
  BBox box;
  int class_id = 0;

  bool operator==(const GroundTruthBox&) const = default;
};

struct MatchResult {
  std::size_t detection = 0;  // index into the input detection list
  double score = 0.0;
  bool correct = false;       // U
  double matched_iou = 0.0;   // IoU with the matched GT, 0 when unmatched
  std::optional<std::size_t> matched_gt;
  // Highest IoU with any GT of the same image, regardless of class or
  // whether that GT was already taken.
  double best_iou = 0.0;
  // Unmatched only because every qualifying GT was claimed by a
  // higher-scoring detection.
  bool duplicate = false;
};

struct MatchOptions {
  double gamma = 0.5;
  // Detections scoring below this are dropped before matching.
  double min_score = 0.0;
};

/// Greedy one-to-one matching per image.
///
/// Within an image, detections are visited by descending score (ties: lower
/// input index first). Each takes the unclaimed same-class GT with the highest
/// IoU >= gamma (ties: lower GT index). Results come back ordered by detection
/// index and omit detections removed by `min_score`.
///
/// Throws ParameterError when gamma is outside (0, 1), InputError on invalid
/// boxes or scores outside [0, 1].
std::vector<MatchResult> match(std::span<const Detection> detections,
                               std::span<const GroundTruthBox> ground_truth,
                               const MatchOptions& options = {});

/// (score, U) pairs for D-ECE, optionally leaving out duplicates.
std::vector<ScoredOutcome> scored_outcomes(std::span<const MatchResult> results,
                                           bool drop_duplicates = false);

/// All-point interpolated average precision of the ranked results against
/// `num_ground_truth` objects.
double average_precision(std::span<const MatchResult> results,
                         std::size_t num_ground_truth);

}  // namespace detcal

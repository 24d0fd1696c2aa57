#include "detcal/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "detcal/error.hpp"
#include "detcal/kernels/kernels.hpp"
#include "detcal/parallel.hpp"

namespace detcal {
namespace {

struct ImageBucket {
  std::vector<std::size_t> detections;
  std::vector<std::size_t> ground_truth;
};

void match_image(const ImageBucket& bucket,
                 std::span<const Detection> detections,
                 std::span<const GroundTruthBox> ground_truth, double gamma,
                 std::vector<MatchResult>& out) {
  const std::size_t n_gt = bucket.ground_truth.size();
  std::vector<double> x1(n_gt), y1(n_gt), x2(n_gt), y2(n_gt);
  for (std::size_t g = 0; g < n_gt; ++g) {
    const BBox& b = ground_truth[bucket.ground_truth[g]].box;
    x1[g] = b.x1;
    y1[g] = b.y1;
    x2[g] = b.x2;
    y2[g] = b.y2;
  }
  const kernels::BoxColumns columns{x1, y1, x2, y2};

  std::vector<std::size_t> order = bucket.detections;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return detections[a].score > detections[b].score;
                   });

  const kernels::KernelTable& k = kernels::active();
  std::vector<double> overlaps(n_gt);
  std::vector<bool> claimed(n_gt, false);
  for (std::size_t d : order) {
    const Detection& det = detections[d];
    MatchResult& result = out[d];
    result.detection = d;
    result.score = det.score;
    k.iou_one_to_many(det.box, columns, overlaps);

    std::optional<std::size_t> best;
    double best_overlap = -1.0;
    bool blocked = false;
    for (std::size_t g = 0; g < n_gt; ++g) {
      result.best_iou = std::max(result.best_iou, overlaps[g]);
      if (ground_truth[bucket.ground_truth[g]].class_id != det.class_id) continue;
      if (overlaps[g] < gamma) continue;
      if (claimed[g]) {
        blocked = true;
        continue;
      }
      if (overlaps[g] > best_overlap) {
        best_overlap = overlaps[g];
        best = g;
      }
    }
    if (best) {
      claimed[*best] = true;
      result.correct = true;
      result.matched_iou = best_overlap;
      result.matched_gt = bucket.ground_truth[*best];
    } else {
      result.duplicate = blocked;
    }
  }
}

}  // namespace

std::vector<MatchResult> match(std::span<const Detection> detections,
                               std::span<const GroundTruthBox> ground_truth,
                               const MatchOptions& options) {
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) {
    throw ParameterError("gamma must lie in (0, 1), got " +
                         std::to_string(options.gamma));
  }
  std::map<ImageId, ImageBucket> buckets;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& det = detections[i];
    validate(det.box);
    if (!(det.score >= 0.0 && det.score <= 1.0)) {
      throw InputError("detection " + std::to_string(i) + " has score " +
                       std::to_string(det.score) + " outside [0, 1]");
    }
    if (det.score < options.min_score) continue;
    buckets[det.image_id].detections.push_back(i);
  }
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    validate(ground_truth[i].box);
    auto it = buckets.find(ground_truth[i].image_id);
    if (it != buckets.end()) it->second.ground_truth.push_back(i);
  }

  std::vector<const ImageBucket*> images;
  images.reserve(buckets.size());
  for (const auto& [id, bucket] : buckets) images.push_back(&bucket);

  // Slots are indexed by detection, so image workers never share one.
  std::vector<MatchResult> slots(detections.size());
  parallel_for(
      images.size(),
      [&](std::size_t i) {
        match_image(*images[i], detections, ground_truth, options.gamma, slots);
      },
      8);

  std::vector<MatchResult> results;
  results.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score >= options.min_score) results.push_back(slots[i]);
  }
  return results;
}

std::vector<ScoredOutcome> scored_outcomes(std::span<const MatchResult> results,
                                           bool drop_duplicates) {
  std::vector<ScoredOutcome> out;
  out.reserve(results.size());
  for (const MatchResult& r : results) {
    if (drop_duplicates && r.duplicate) continue;
    out.push_back({r.score, r.correct});
  }
  return out;
}

double average_precision(std::span<const MatchResult> results,
                         std::size_t num_ground_truth) {
  if (num_ground_truth == 0) return 0.0;
  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return results[a].score > results[b].score;
  });

  std::vector<double> precision(order.size());
  std::vector<double> recall(order.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (results[order[i]].correct) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_ground_truth);
  }
  // Precision envelope, then area under the step curve.
  for (std::size_t i = order.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace detcal

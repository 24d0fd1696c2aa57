#pragma once

// Uncertainty from Monte-Carlo inference passes and the soft pseudo-targets
// built from it.
//
// For each anchor detection, the agreeing detections of the other passes
// (same class, IoU > gamma, best one per pass) form its group. Over the group
// four features are collected: confidence, normalised centre x, normalised
// centre y, aspect ratio. With psi_j / Psi_j the population variance / mean
// of feature j and Psi_agg the mean of the Psi_j, the joint uncertainty is
//
//   u = 1/J sum_j [ psi_j + (Psi_j - Psi_agg)^2 ]      (combined)
//   u = 1/J sum_j psi_j                                 (within_only)
//
// and a one-hot target value H is softened to
//
//   H (1 - u)         if sbar >= kappa1
//   H sbar (1 - u)    if kappa2 <= sbar < kappa1
//   rejected          otherwise
//
// with sbar the mean group confidence and u clamped to [0, 1].

#include <cstddef>
#include <span>
#include <vector>

#include "detcal/matching.hpp"

namespace detcal {

struct McPass {
  int index = 0;
  std::vector<Detection> detections;

  bool operator==(const McPass&) const = default;
};

/// All stochastic passes over one image.
struct McImage {
  ImageId image_id = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<McPass> passes;

  bool operator==(const McImage&) const = default;
};

/// Position of a detection: index into McImage::passes, then into that
/// pass's detections.
struct MemberRef {
  std::size_t pass = 0;
  std::size_t detection = 0;

  bool operator==(const MemberRef&) const = default;
};

struct MemberFeatures {
  double confidence = 0.0;
  double center_x = 0.0;  // cx / image width
  double center_y = 0.0;  // cy / image height
  double aspect = 0.0;    // w / h, optionally min-max normalised per image
};

struct McGroup {
  MemberRef anchor;
  int class_id = 0;
  std::vector<MemberRef> members;
  std::vector<MemberFeatures> features;  // parallel to members
  double sbar = 0.0;  // mean member confidence
  double u = 0.0;     // filled by ict_pipeline
};

enum class UncertaintyMode { kCombined, kWithinOnly };

struct GroupingOptions {
  double gamma = 0.5;
  // Count the anchor as a member of its own group. Off gives the strict
  // "other passes only" group, which can be empty.
  bool include_anchor = true;
  // Min-max normalise aspect ratios over all detections of the image.
  bool normalize_aspect = false;
};

/// One group per detection of every pass, in (pass, detection) order.
/// Throws InputError for fewer than two passes, duplicate pass indices,
/// non-positive image size or zero-height/width boxes; ParameterError for
/// gamma outside (0, 1).
std::vector<McGroup> group_detections(const McImage& image,
                                      const GroupingOptions& options = {});

double joint_uncertainty(std::span<const MemberFeatures> features,
                         UncertaintyMode mode = UncertaintyMode::kCombined);
double joint_uncertainty(const McGroup& group,
                         UncertaintyMode mode = UncertaintyMode::kCombined);

enum class TargetStatus { kConfident, kTempered, kRejected };

const char* to_string(TargetStatus status);

struct SoftTarget {
  std::size_t location = 0;
  int class_id = 0;
  double value = 0.0;
  TargetStatus status = TargetStatus::kRejected;
};

inline constexpr double kDefaultKappa1 = 0.75;
inline constexpr double kDefaultKappa2 = 0.5;

/// Soft target for a one-hot value `hard` (0 or 1). Throws ParameterError
/// unless kappa2 < kappa1; InputError for hard outside {0, 1} or sbar outside
/// [0, 1]. `location` and `class_id` of the result are left at 0.
SoftTarget soft_pseudo_target(double hard, double sbar, double u,
                              double kappa1 = kDefaultKappa1,
                              double kappa2 = kDefaultKappa2);

struct IctOptions {
  GroupingOptions grouping;
  UncertaintyMode mode = UncertaintyMode::kCombined;
  double kappa1 = kDefaultKappa1;
  double kappa2 = kDefaultKappa2;
};

struct AnchorReport {
  MemberRef anchor;
  int class_id = 0;
  std::size_t group_size = 0;
  double sbar = 0.0;
  double u = 0.0;  // unclamped
  SoftTarget target;
};

struct IctResult {
  std::vector<AnchorReport> anchors;  // every anchor, rejected ones included
  std::vector<SoftTarget> targets;    // non-rejected targets only
  // u clamped to [0, 1], parallel to `anchors`; pair with per-anchor error
  // flags to feed d_uce.
  std::vector<double> uncertainties;
};

/// Groups, scores and softens every anchor. The anchor's one-hot value is 1
/// and its location index is its position in (pass, detection) order.
/// An anchor with an empty strict group is rejected with sbar = 0, u = 1.
IctResult ict_pipeline(const McImage& image, const IctOptions& options = {});

}  // namespace detcal

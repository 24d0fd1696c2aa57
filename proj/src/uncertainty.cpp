#include "detcal/uncertainty.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>

#include "detcal/error.hpp"
#include "detcal/kernels/kernels.hpp"
#include "detcal/parallel.hpp"

namespace detcal {
namespace {

constexpr std::size_t kFeatureCount = 4;

struct PassColumns {
  std::vector<double> x1, y1, x2, y2;

  kernels::BoxColumns view() const { return {x1, y1, x2, y2}; }
};

void validate_image(const McImage& image) {
  if (image.passes.size() < 2) {
    throw InputError("uncertainty needs at least 2 MC passes, got " +
                     std::to_string(image.passes.size()));
  }
  if (!(image.width > 0.0) || !(image.height > 0.0) ||
      !std::isfinite(image.width) || !std::isfinite(image.height)) {
    throw InputError("image width and height must be positive");
  }
  std::set<int> seen;
  for (const McPass& pass : image.passes) {
    if (!seen.insert(pass.index).second) {
      throw InputError("duplicate MC pass index " + std::to_string(pass.index));
    }
    for (const Detection& d : pass.detections) {
      validate(d.box);
      if (!(d.box.width() > 0.0) || !(d.box.height() > 0.0)) {
        throw InputError("MC detection with zero width or height in pass " +
                         std::to_string(pass.index));
      }
      if (!(d.score >= 0.0 && d.score <= 1.0)) {
        throw InputError("MC detection score outside [0, 1] in pass " +
                         std::to_string(pass.index));
      }
    }
  }
}

std::array<double, kFeatureCount> as_array(const MemberFeatures& f) {
  return {f.confidence, f.center_x, f.center_y, f.aspect};
}

}  // namespace

std::vector<McGroup> group_detections(const McImage& image,
                                      const GroupingOptions& options) {
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) {
    throw ParameterError("gamma must lie in (0, 1)");
  }
  validate_image(image);

  const std::size_t n_passes = image.passes.size();
  std::vector<PassColumns> columns(n_passes);
  std::vector<MemberRef> anchors;
  double aspect_min = INFINITY;
  double aspect_max = -INFINITY;
  for (std::size_t p = 0; p < n_passes; ++p) {
    const auto& dets = image.passes[p].detections;
    for (std::size_t m = 0; m < dets.size(); ++m) {
      const BBox& b = dets[m].box;
      columns[p].x1.push_back(b.x1);
      columns[p].y1.push_back(b.y1);
      columns[p].x2.push_back(b.x2);
      columns[p].y2.push_back(b.y2);
      anchors.push_back({p, m});
      const double aspect = b.width() / b.height();
      aspect_min = std::min(aspect_min, aspect);
      aspect_max = std::max(aspect_max, aspect);
    }
  }

  auto features_of = [&](const MemberRef& ref) {
    const Detection& d = image.passes[ref.pass].detections[ref.detection];
    double aspect = d.box.width() / d.box.height();
    if (options.normalize_aspect) {
      aspect = aspect_max > aspect_min
                   ? (aspect - aspect_min) / (aspect_max - aspect_min)
                   : 0.0;
    }
    return MemberFeatures{d.score, d.box.center_x() / image.width,
                          d.box.center_y() / image.height, aspect};
  };

  std::vector<McGroup> groups(anchors.size());
  parallel_for(anchors.size(), [&](std::size_t a) {
    const MemberRef anchor = anchors[a];
    const Detection& det = image.passes[anchor.pass].detections[anchor.detection];
    McGroup& group = groups[a];
    group.anchor = anchor;
    group.class_id = det.class_id;
    if (options.include_anchor) group.members.push_back(anchor);

    std::vector<double> overlaps;
    for (std::size_t p = 0; p < n_passes; ++p) {
      if (p == anchor.pass) continue;
      const auto& others = image.passes[p].detections;
      overlaps.resize(others.size());
      kernels::active().iou_one_to_many(det.box, columns[p].view(), overlaps);
      std::optional<std::size_t> best;
      for (std::size_t m = 0; m < others.size(); ++m) {
        if (others[m].class_id != det.class_id) continue;
        if (!(overlaps[m] > options.gamma)) continue;
        if (!best || overlaps[m] > overlaps[*best]) best = m;
      }
      if (best) group.members.push_back({p, *best});
    }

    double confidence_sum = 0.0;
    for (const MemberRef& ref : group.members) {
      group.features.push_back(features_of(ref));
      confidence_sum += group.features.back().confidence;
    }
    if (!group.members.empty()) {
      group.sbar = confidence_sum / static_cast<double>(group.members.size());
    }
  });
  return groups;
}

double joint_uncertainty(std::span<const MemberFeatures> features,
                         UncertaintyMode mode) {
  if (features.empty()) throw InputError("joint uncertainty of an empty group");
  const auto n = static_cast<double>(features.size());
  std::array<double, kFeatureCount> mean{};
  for (const MemberFeatures& f : features) {
    const auto v = as_array(f);
    for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += v[j];
  }
  for (double& m : mean) m /= n;

  std::array<double, kFeatureCount> variance{};
  for (const MemberFeatures& f : features) {
    const auto v = as_array(f);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const double d = v[j] - mean[j];
      variance[j] += d * d;
    }
  }
  for (double& v : variance) v /= n;

  double within = 0.0;
  for (double v : variance) within += v;
  if (mode == UncertaintyMode::kWithinOnly) return within / kFeatureCount;

  double aggregate = 0.0;
  for (double m : mean) aggregate += m;
  aggregate /= kFeatureCount;
  double total = 0.0;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const double d = mean[j] - aggregate;
    total += variance[j] + d * d;
  }
  return total / kFeatureCount;
}

double joint_uncertainty(const McGroup& group, UncertaintyMode mode) {
  return joint_uncertainty(group.features, mode);
}

const char* to_string(TargetStatus status) {
  switch (status) {
    case TargetStatus::kConfident:
      return "confident";
    case TargetStatus::kTempered:
      return "tempered";
    case TargetStatus::kRejected:
      return "rejected";
  }
  return "rejected";
}

SoftTarget soft_pseudo_target(double hard, double sbar, double u, double kappa1,
                              double kappa2) {
  if (!(kappa2 < kappa1)) {
    throw ParameterError("kappa2 must be smaller than kappa1");
  }
  if (hard != 0.0 && hard != 1.0) {
    throw InputError("one-hot target value must be 0 or 1");
  }
  if (!(sbar >= 0.0 && sbar <= 1.0)) {
    throw InputError("mean confidence outside [0, 1]");
  }
  if (std::isnan(u)) throw InputError("uncertainty is NaN");
  const double keep = 1.0 - std::clamp(u, 0.0, 1.0);

  SoftTarget target;
  if (sbar >= kappa1) {
    target.value = hard * keep;
    target.status = TargetStatus::kConfident;
  } else if (sbar >= kappa2) {
    target.value = hard * sbar * keep;
    target.status = TargetStatus::kTempered;
  } else {
    target.value = 0.0;
    target.status = TargetStatus::kRejected;
  }
  return target;
}

IctResult ict_pipeline(const McImage& image, const IctOptions& options) {
  if (!(options.kappa2 < options.kappa1)) {
    throw ParameterError("kappa2 must be smaller than kappa1");
  }
  std::vector<McGroup> groups = group_detections(image, options.grouping);

  IctResult result;
  result.anchors.reserve(groups.size());
  result.uncertainties.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    McGroup& group = groups[i];
    AnchorReport report;
    report.anchor = group.anchor;
    report.class_id = group.class_id;
    report.group_size = group.members.size();
    if (group.members.empty()) {
      report.sbar = 0.0;
      report.u = 1.0;
      report.target.status = TargetStatus::kRejected;
    } else {
      group.u = joint_uncertainty(group, options.mode);
      report.sbar = group.sbar;
      report.u = group.u;
      report.target = soft_pseudo_target(1.0, group.sbar, group.u,
                                         options.kappa1, options.kappa2);
    }
    report.target.location = i;
    report.target.class_id = group.class_id;
    result.uncertainties.push_back(std::clamp(report.u, 0.0, 1.0));
    if (report.target.status != TargetStatus::kRejected) {
      result.targets.push_back(report.target);
    }
    result.anchors.push_back(report);
  }
  return result;
}

}  // namespace detcal

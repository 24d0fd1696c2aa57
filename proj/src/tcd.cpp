#include "detcal/tcd.hpp"

#include <cmath>
#include <string>

#include "detcal/error.hpp"
#include "detcal/kernels/kernels.hpp"

namespace detcal {
namespace {

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

struct ClassMeans {
  std::vector<double> confidence;
  std::vector<double> target;
};

ClassMeans class_means(const TcdBatch& batch) {
  const kernels::KernelTable& k = kernels::active();
  const std::size_t n_classes = batch.classes;
  std::vector<double> sums(n_classes, 0.0);
  std::vector<std::uint64_t> counts(n_classes, 0);
  k.accumulate_columns(batch.confidences, n_classes, sums);
  k.count_columns(batch.targets, n_classes, counts);

  const double rows =
      static_cast<double>(batch.images) * static_cast<double>(batch.locations);
  ClassMeans means{std::vector<double>(n_classes), std::vector<double>(n_classes)};
  for (std::size_t c = 0; c < n_classes; ++c) {
    means.confidence[c] = sums[c] / rows;
    means.target[c] = static_cast<double>(counts[c]) / rows;
  }
  return means;
}

double d_cls_value(const ClassMeans& means) {
  return kernels::active().abs_diff_sum(means.confidence, means.target) /
         static_cast<double>(means.confidence.size());
}

std::size_t images_with_positives(const TcdBatch& batch) {
  std::size_t n = 0;
  for (const ImagePositives& p : batch.positives) n += p.empty() ? 0 : 1;
  return n;
}

void require_map(const TcdBatch& batch) {
  batch.validate();
  if (batch.cells() == 0) {
    throw InputError("TCD batch has an empty confidence map");
  }
}

}  // namespace

void TcdBatch::validate() const {
  const std::size_t n = cells();
  if (confidences.size() != n || targets.size() != n) {
    throw InputError("TCD batch arrays do not match L*R*K = " + std::to_string(n));
  }
  if (positives.size() != images) {
    throw InputError("TCD batch needs one positives list per image (" +
                     std::to_string(images) + "), got " +
                     std::to_string(positives.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_unit_interval(confidences[i])) {
      throw InputError("confidence at flat index " + std::to_string(i) +
                       " outside [0, 1]");
    }
    if (targets[i] > 1) {
      throw InputError("target at flat index " + std::to_string(i) + " is not 0/1");
    }
  }
  for (std::size_t row = 0; classes > 0 && row < n / classes; ++row) {
    unsigned ones = 0;
    for (std::size_t c = 0; c < classes; ++c) ones += targets[row * classes + c];
    if (ones > 1) {
      throw InputError("target row " + std::to_string(row) + " has more than one label");
    }
  }
  for (std::size_t l = 0; l < positives.size(); ++l) {
    const ImagePositives& p = positives[l];
    if (p.iou.size() != p.shat.size()) {
      throw InputError("positives of image " + std::to_string(l) + " are ragged");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!in_unit_interval(p.iou[i]) || !in_unit_interval(p.shat[i])) {
        throw InputError("positive " + std::to_string(i) + " of image " +
                         std::to_string(l) + " outside [0, 1]");
      }
    }
  }
}

double d_cls(const TcdBatch& batch) {
  require_map(batch);
  return d_cls_value(class_means(batch));
}

double d_det(const TcdBatch& batch) {
  batch.validate();
  const std::size_t with_positives = images_with_positives(batch);
  if (with_positives == 0) return 0.0;
  const kernels::KernelTable& k = kernels::active();
  double total = 0.0;
  for (const ImagePositives& p : batch.positives) {
    if (p.empty()) continue;
    total += k.abs_diff_sum(p.iou, p.shat) / static_cast<double>(p.size());
  }
  return total / static_cast<double>(with_positives);
}

TcdValueGrad tcd_loss(const TcdBatch& batch) {
  require_map(batch);
  const kernels::KernelTable& k = kernels::active();
  TcdValueGrad out;

  const ClassMeans means = class_means(batch);
  out.d_cls = d_cls_value(means);
  out.d_det = d_det(batch);
  out.loss = 0.5 * (out.d_cls + out.d_det);

  // Every location shares the per-class gradient.
  const std::size_t n_classes = batch.classes;
  const double cls_scale = 1.0 / (2.0 * static_cast<double>(n_classes) *
                                  static_cast<double>(batch.images) *
                                  static_cast<double>(batch.locations));
  std::vector<double> per_class(n_classes);
  k.scaled_sign_diff(means.confidence, means.target, cls_scale, per_class);
  out.grad_confidences.resize(batch.cells());
  for (std::size_t row = 0; row < batch.cells() / n_classes; ++row) {
    std::copy(per_class.begin(), per_class.end(),
              out.grad_confidences.begin() + static_cast<std::ptrdiff_t>(row * n_classes));
  }

  const std::size_t with_positives = images_with_positives(batch);
  out.grad_shat.resize(batch.images);
  out.grad_iou.resize(batch.images);
  for (std::size_t l = 0; l < batch.images; ++l) {
    const ImagePositives& p = batch.positives[l];
    out.grad_shat[l].assign(p.size(), 0.0);
    out.grad_iou[l].assign(p.size(), 0.0);
    if (p.empty()) continue;
    const double scale = 1.0 / (2.0 * static_cast<double>(with_positives) *
                                static_cast<double>(p.size()));
    k.scaled_sign_diff(p.iou, p.shat, scale, out.grad_iou[l]);
    k.scaled_sign_diff(p.iou, p.shat, -scale, out.grad_shat[l]);
  }
  return out;
}

std::array<double, 4> chain_box_gradient(double grad_iou, const BBox& predicted,
                                         const BBox& target) {
  std::array<double, 4> g = iou_grad(predicted, target);
  for (double& v : g) v *= grad_iou;
  return g;
}

}  // namespace detcal

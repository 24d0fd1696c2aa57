#include "detcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "detcal/error.hpp"

namespace detcal {
namespace {

constexpr double kCell = 100.0;
constexpr double kBoxOffset = 20.0;
constexpr double kBoxSize = 60.0;
constexpr double kMaxJitter = 1.5;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  // 53 random mantissa bits -> [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int integer(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

  double normal() {
    // Box-Muller, cosine branch only; 1 - u keeps the log argument > 0.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Marsaglia-Tsang; shape < 1 boosted through shape + 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(1.0 - uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = 1.0 - uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double beta(double a, double b) {
    if (a == 1.0 && b == 1.0) return uniform();
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

double CalibrationCurve::operator()(double score) const {
  switch (kind) {
    case CurveKind::kIdentity:
      return score;
    case CurveKind::kConstantGap:
      return std::clamp(score - parameter, 0.0, 1.0);
    case CurveKind::kTemperature: {
      const double s = std::clamp(score, 1e-7, 1.0 - 1e-7);
      const double z = std::log(s / (1.0 - s)) / parameter;
      return 1.0 / (1.0 + std::exp(-z));
    }
  }
  return score;
}

SynthDataset generate(const SynthSpec& spec) {
  if (!(spec.alpha > 0.0) || !(spec.beta > 0.0) || !std::isfinite(spec.alpha) ||
      !std::isfinite(spec.beta)) {
    throw ParameterError("Beta parameters must be finite and positive");
  }
  if (!(spec.score_min >= 0.0 && spec.score_max <= 1.0 &&
        spec.score_min < spec.score_max)) {
    throw ParameterError("score range must satisfy 0 <= min < max <= 1");
  }
  if (spec.classes < 1 || spec.detections == 0 || spec.per_image == 0) {
    throw ParameterError("classes, detections and per_image must be positive");
  }
  if (spec.curve.kind == CurveKind::kTemperature && !(spec.curve.parameter > 0.0)) {
    throw ParameterError("curve temperature must be positive");
  }
  if (spec.curve.kind == CurveKind::kConstantGap &&
      !(spec.curve.parameter >= 0.0 && spec.curve.parameter <= 1.0)) {
    throw ParameterError("curve gap must lie in [0, 1]");
  }

  Sampler rng(spec.seed);
  const auto side = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(spec.per_image))));
  const double image_size = static_cast<double>(side) * kCell;

  SynthDataset out;
  DatasetBundle& bundle = out.bundle;
  for (int c = 0; c < spec.classes; ++c) {
    bundle.categories[c] = "class_" + std::to_string(c);
  }
  bundle.detections.reserve(spec.detections);
  out.correct.reserve(spec.detections);

  for (std::size_t i = 0; i < spec.detections; ++i) {
    const auto image_id = static_cast<ImageId>(i / spec.per_image);
    const std::size_t slot = i % spec.per_image;
    if (slot == 0) bundle.images[image_id] = {image_id, image_size, image_size};

    const double score =
        spec.score_min + (spec.score_max - spec.score_min) * rng.beta(spec.alpha, spec.beta);
    const int class_id = rng.integer(spec.classes);
    const bool correct = rng.uniform() < spec.curve(score);
    const double dx = rng.uniform(-kMaxJitter, kMaxJitter);
    const double dy = rng.uniform(-kMaxJitter, kMaxJitter);

    const double cell_x = static_cast<double>(slot % side) * kCell;
    const double cell_y = static_cast<double>(slot / side) * kCell;
    const BBox anchor{cell_x + kBoxOffset, cell_y + kBoxOffset,
                      cell_x + kBoxOffset + kBoxSize, cell_y + kBoxOffset + kBoxSize};
    if (correct) bundle.ground_truth.push_back({image_id, anchor, class_id});
    bundle.detections.push_back(
        {image_id, translated(anchor, dx, dy), class_id, score});
    out.correct.push_back(correct);
  }
  return out;
}

}  // namespace detcal

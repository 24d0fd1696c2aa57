#pragma once

// Post-hoc temperature scaling of detection confidences.
//
// A score s is mapped to sigmoid(logit(s) / T). T > 1 pulls scores toward
// 0.5, T < 1 pushes them away, T = 1 is the identity. The map is monotone, so
// rankings, matching outcomes and AP are untouched.

#include <span>
#include <vector>

#include "detcal/metrics.hpp"

namespace detcal {

/// Scores are clamped to [kScoreEpsilon, 1 - kScoreEpsilon] before the logit.
inline constexpr double kScoreEpsilon = 1e-7;

/// Throws ParameterError for T <= 0 or non-finite T, InputError for scores
/// outside [0, 1].
double apply_temperature(double score, double temperature);

struct TemperatureModel {
  double temperature = 1.0;

  double apply(double score) const { return apply_temperature(score, temperature); }
  std::vector<double> apply(std::span<const double> scores) const;
};

enum class Objective { kNll, kDEce };

struct FitOptions {
  Objective objective = Objective::kNll;
  int bins = kDefaultBins;  // D-ECE objective only
  double min_temperature = 0.05;
  double max_temperature = 20.0;
  int grid_points = 100;  // log-spaced coarse search
  double tolerance = 1e-3;  // golden-section stop, on the bracket width
};

/// Mean binary cross-entropy between the scaled scores and U.
double nll_objective(std::span<const ScoredOutcome> pairs, double temperature);

/// D-ECE of the scaled scores.
double dece_objective(std::span<const ScoredOutcome> pairs, double temperature,
                      int bins = kDefaultBins);

/// Minimises the chosen objective over T on held-out (score, U) pairs: coarse
/// log-spaced grid, then golden-section refinement around the best grid
/// point. Deterministic.
///
/// Throws InputError on empty input and, for NLL, when every pair has the
/// same U (the objective then has no interior minimum).
TemperatureModel fit_temperature(std::span<const ScoredOutcome> pairs,
                                 const FitOptions& options = {});

}  // namespace detcal

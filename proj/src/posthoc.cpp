#include "detcal/posthoc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "detcal/error.hpp"

namespace detcal {
namespace {

void check_temperature(double t) {
  if (!std::isfinite(t) || !(t > 0.0)) {
    throw ParameterError("temperature must be finite and > 0, got " +
                         std::to_string(t));
  }
}

double clamp_score(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw InputError("score " + std::to_string(score) + " outside [0, 1]");
  }
  return std::clamp(score, kScoreEpsilon, 1.0 - kScoreEpsilon);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

double golden_section(const std::function<double(double)>& f, double lo,
                      double hi, double tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double apply_temperature(double score, double temperature) {
  check_temperature(temperature);
  const double s = clamp_score(score);
  if (temperature == 1.0) return s;
  return sigmoid(logit(s) / temperature);
}

std::vector<double> TemperatureModel::apply(std::span<const double> scores) const {
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(apply_temperature(s, temperature));
  return out;
}

double nll_objective(std::span<const ScoredOutcome> pairs, double temperature) {
  check_temperature(temperature);
  if (pairs.empty()) throw InputError("NLL of an empty validation set");
  double total = 0.0;
  for (const ScoredOutcome& p : pairs) {
    // BCE(sigmoid(z), u) = softplus(z) - u * z
    const double z = logit(clamp_score(p.score)) / temperature;
    total += softplus(z) - (p.correct ? z : 0.0);
  }
  return total / static_cast<double>(pairs.size());
}

double dece_objective(std::span<const ScoredOutcome> pairs, double temperature,
                      int bins) {
  std::vector<ScoredOutcome> scaled(pairs.begin(), pairs.end());
  for (ScoredOutcome& p : scaled) p.score = apply_temperature(p.score, temperature);
  return d_ece(scaled, bins).value;
}

TemperatureModel fit_temperature(std::span<const ScoredOutcome> pairs,
                                 const FitOptions& options) {
  if (pairs.empty()) throw InputError("empty validation set");
  if (!(options.min_temperature > 0.0) ||
      !(options.max_temperature > options.min_temperature) ||
      options.grid_points < 3 || !(options.tolerance > 0.0)) {
    throw ParameterError("invalid temperature search range");
  }

  std::function<double(double)> objective;
  std::vector<double> logits;
  std::vector<char> outcome;
  if (options.objective == Objective::kNll) {
    std::size_t positives = 0;
    logits.reserve(pairs.size());
    outcome.reserve(pairs.size());
    for (const ScoredOutcome& p : pairs) {
      logits.push_back(logit(clamp_score(p.score)));
      outcome.push_back(p.correct ? 1 : 0);
      positives += p.correct ? 1 : 0;
    }
    if (positives == 0 || positives == pairs.size()) {
      throw InputError(
          "NLL temperature fit needs both correct and incorrect detections");
    }
    // Same arithmetic as nll_objective with the logits hoisted out.
    objective = [&](double t) {
      double total = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i] / t;
        total += softplus(z) - (outcome[i] ? z : 0.0);
      }
      return total / static_cast<double>(logits.size());
    };
  } else {
    if (options.bins < 1) throw ParameterError("bin count must be >= 1");
    objective = [&](double t) { return dece_objective(pairs, t, options.bins); };
  }

  const int n = options.grid_points;
  const double log_lo = std::log(options.min_temperature);
  const double log_hi = std::log(options.max_temperature);
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
  }
  grid.front() = options.min_temperature;
  grid.back() = options.max_temperature;

  int best = 0;
  double best_value = objective(grid[0]);
  for (int i = 1; i < n; ++i) {
    const double v = objective(grid[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double lo = grid[std::max(best - 1, 0)];
  const double hi = grid[std::min(best + 1, n - 1)];
  double t = golden_section(objective, lo, hi, options.tolerance);
  // A flat or kinked objective can leave golden-section worse than the grid.
  if (objective(t) > best_value) t = grid[best];
  return TemperatureModel{t};
}

}  // namespace detcal

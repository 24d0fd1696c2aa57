#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "detcal/error.hpp"
#include "detcal/posthoc.hpp"
#include "oracles.hpp"

using namespace detcal;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<ScoredOutcome> pairs_at_temperature(double t_true, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ScoredOutcome> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double s = detcal::testing::uniform(rng, 0.01, 0.99);
    const double p = sigmoid(std::log(s / (1 - s)) / t_true);
    out.push_back({s, detcal::testing::uniform(rng, 0, 1) < p});
  }
  return out;
}

}  // namespace

TEST_CASE("apply_temperature closed forms") {
  for (double t : {0.1, 0.5, 1.0, 2.0, 17.0}) CHECK(apply_temperature(0.5, t) == doctest::Approx(0.5).epsilon(1e-15));
  for (double s : {0.01, 0.3, 0.77, 0.999}) CHECK(apply_temperature(s, 1.0) == s);
  CHECK(apply_temperature(0.9, 2.0) == doctest::Approx(0.75).epsilon(1e-12));
  // Extremes are clamped.
  CHECK(apply_temperature(1.0, 1.0) == 1.0 - kScoreEpsilon);
  CHECK(apply_temperature(0.0, 1.0) == kScoreEpsilon);
  CHECK(std::isfinite(apply_temperature(1.0, 0.05)));
}

TEST_CASE("temperature contracts or expands toward 0.5") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const double s = detcal::testing::uniform(rng, 0, 1);
    const double hot = apply_temperature(s, 3.0);
    const double cold = apply_temperature(s, 0.4);
    CHECK(std::fabs(hot - 0.5) <= std::fabs(s - 0.5) + 1e-12);
    CHECK(std::fabs(cold - 0.5) >= std::fabs(s - 0.5) - 1e-12);
    const double s2 = detcal::testing::uniform(rng, 0, 1);
    if (s < s2) CHECK(apply_temperature(s, 2.5) <= apply_temperature(s2, 2.5));
  }
}

TEST_CASE("apply_temperature errors") {
  CHECK_THROWS_AS(apply_temperature(0.5, 0.0), ParameterError);
  CHECK_THROWS_AS(apply_temperature(0.5, -1.0), ParameterError);
  CHECK_THROWS_AS(apply_temperature(0.5, NAN), ParameterError);
  CHECK_THROWS_AS(apply_temperature(1.5, 1.0), InputError);
  const TemperatureModel model{2.0};
  const std::vector<double> in{0.9, 0.5};
  const auto out = model.apply(in);
  CHECK(out[0] == doctest::Approx(0.75));
  CHECK(out[1] == doctest::Approx(0.5));
}

TEST_CASE("nll objective equals the naive cross-entropy") {
  const auto pairs = pairs_at_temperature(1.5, 300, 4);
  for (double t : {0.3, 1.0, 2.0, 6.0}) {
    double naive = 0.0;
    for (const auto& p : pairs) {
      const double q = apply_temperature(p.score, t);
      naive -= p.correct ? std::log(q) : std::log(1 - q);
    }
    naive /= static_cast<double>(pairs.size());
    CHECK(nll_objective(pairs, t) == doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("fit recovers the generating temperature") {
  const auto hot = pairs_at_temperature(2.0, 50000, 10);
  const double t2 = fit_temperature(hot).temperature;
  CHECK(t2 >= 1.9);
  CHECK(t2 <= 2.1);
  const auto calibrated = pairs_at_temperature(1.0, 50000, 11);
  const double t1 = fit_temperature(calibrated).temperature;
  CHECK(t1 >= 0.95);
  CHECK(t1 <= 1.05);
  CHECK(fit_temperature(hot).temperature == t2);  // deterministic
}

TEST_CASE("d_ece objective pushes overconfident scores down") {
  std::vector<ScoredOutcome> pairs;
  for (int i = 0; i < 10; ++i) pairs.push_back({0.8, i % 2 == 0});
  FitOptions opts;
  opts.objective = Objective::kDEce;
  const auto model = fit_temperature(pairs, opts);
  CHECK(model.temperature > 1.0);
  CHECK(dece_objective(pairs, model.temperature) < dece_objective(pairs, 1.0));
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit_temperature(std::vector<ScoredOutcome>{}), InputError);
  const std::vector<ScoredOutcome> all_right(20, ScoredOutcome{0.7, true});
  const std::vector<ScoredOutcome> all_wrong(20, ScoredOutcome{0.7, false});
  CHECK_THROWS_AS(fit_temperature(all_right), InputError);
  CHECK_THROWS_AS(fit_temperature(all_wrong), InputError);
}

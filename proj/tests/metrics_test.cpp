#include <doctest.h>

#include <random>
#include <vector>

#include "detcal/error.hpp"
#include "detcal/metrics.hpp"
#include "oracles.hpp"

using namespace detcal;
using detcal::testing::brute_force_binned_error;

namespace {

std::vector<ScoredOutcome> constant_half_correct(double score, int n) {
  std::vector<ScoredOutcome> out;
  for (int i = 0; i < n; ++i) out.push_back({score, i % 2 == 0});
  return out;
}

}  // namespace

TEST_CASE("ece hand cases") {
  std::vector<ClsSample> perfect(7, ClsSample{1.0, 3, 3});
  CHECK(ece(perfect).value == 0.0);

  std::vector<ClsSample> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({0.8, 1, i < 5 ? 1 : 0});
  CHECK(ece(ten, 1).value == doctest::Approx(0.3).epsilon(1e-12));

  std::vector<ClsSample> two_bins;
  for (int i = 0; i < 4; ++i) two_bins.push_back({0.2, 0, i == 0 ? 0 : 1});
  for (int i = 0; i < 6; ++i) two_bins.push_back({0.9, 0, i < 3 ? 0 : 1});
  CHECK(ece(two_bins).value == doctest::Approx(0.26).epsilon(1e-12));
}

TEST_CASE("d_ece hand cases") {
  std::vector<ScoredOutcome> perfect(5, ScoredOutcome{1.0, true});
  CHECK(d_ece(perfect).value == 0.0);
  const auto half = constant_half_correct(0.8, 10);
  const auto r = d_ece(half);
  CHECK(r.value == doctest::Approx(0.3).epsilon(1e-12));
  int occupied = 0;
  for (const Bin& b : r.table.bins) occupied += b.count > 0 ? 1 : 0;
  CHECK(occupied == 1);
  CHECK(r.table.bins[7].count == 10);  // 0.8 is the upper edge of (0.7, 0.8]
}

TEST_CASE("d_uce hand cases") {
  std::vector<UncertaintyEntry> zero(4, UncertaintyEntry{0.0, false});
  CHECK(d_uce(zero).value == 0.0);
  std::vector<UncertaintyEntry> wrong(6, UncertaintyEntry{0.3, true});
  CHECK(d_uce(wrong).value == doctest::Approx(0.7).epsilon(1e-12));
  std::vector<UncertaintyEntry> matched{{0, false}, {1, true}, {1, true}, {0, false}};
  CHECK(d_uce(matched).value == 0.0);
}

TEST_CASE("metric errors") {
  CHECK_THROWS_AS(d_ece(std::vector<ScoredOutcome>{}), InputError);
  CHECK_THROWS_AS(ece(std::vector<ClsSample>{}), InputError);
  CHECK_THROWS_AS(d_uce(std::vector<UncertaintyEntry>{}), InputError);
  const auto half = constant_half_correct(0.8, 2);
  CHECK_THROWS_AS(d_ece(half, 0), ParameterError);
  CHECK_THROWS_AS(d_ece(std::vector<ScoredOutcome>{{1.5, true}}), InputError);
  CHECK_THROWS_AS(d_ece(std::vector<ScoredOutcome>{{-0.1, true}}), InputError);
  const std::vector<double> v{0.1, 0.2};
  const std::vector<double> o{1.0};
  CHECK_THROWS_AS(bin_values(v, o, 10), InputError);
}

TEST_CASE("metrics agree with the brute-force oracle") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 50);
    const int bins = 1 + static_cast<int>(rng() % 20);
    std::vector<double> values(n), outcomes(n);
    std::vector<ScoredOutcome> dets(n);
    std::vector<UncertaintyEntry> unc(n);
    std::vector<ClsSample> cls(n);
    for (int i = 0; i < n; ++i) {
      // Mix in exact bin edges.
      values[i] = (rng() % 4 == 0) ? static_cast<double>(rng() % (bins + 1)) / bins
                                   : detcal::testing::uniform(rng, 0, 1);
      outcomes[i] = (rng() % 2) ? 1.0 : 0.0;
      dets[i] = {values[i], outcomes[i] == 1.0};
      unc[i] = {values[i], outcomes[i] == 1.0};
      cls[i] = {values[i], 1, outcomes[i] == 1.0 ? 1 : 2};
    }
    const double expected = brute_force_binned_error(values, outcomes, bins);
    CHECK(std::fabs(d_ece(dets, bins).value - expected) <= 1e-12);
    CHECK(std::fabs(d_uce(unc, bins).value - expected) <= 1e-12);
    CHECK(std::fabs(ece(cls, bins).value - expected) <= 1e-12);
  }
}

TEST_CASE("metric properties") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::vector<ScoredOutcome> dets(n);
    double conf_sum = 0.0;
    double hit_sum = 0.0;
    for (auto& d : dets) {
      d = {detcal::testing::uniform(rng, 0, 1), rng() % 3 != 0};
      conf_sum += d.score;
      hit_sum += d.correct ? 1.0 : 0.0;
    }
    const auto r = d_ece(dets);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    // M = 1 is the global gap.
    CHECK(d_ece(dets, 1).value == doctest::Approx(std::fabs(hit_sum - conf_sum) / n).epsilon(1e-12));
    // Duplicating every sample changes nothing.
    auto twice = dets;
    twice.insert(twice.end(), dets.begin(), dets.end());
    CHECK(d_ece(twice).value == doctest::Approx(r.value).epsilon(1e-12));
    std::size_t total = 0;
    for (const Bin& b : r.table.bins) total += b.count;
    CHECK(total == dets.size());
    CHECK(r.table.calibration_error() == doctest::Approx(r.value).epsilon(1e-12));
  }
}

TEST_CASE("reliability data") {
  std::vector<ScoredOutcome> upper{{0.9, true}, {0.7, false}};
  const auto rel = reliability_data(d_ece(upper, 2).table);
  REQUIRE(rel.size() == 2);
  CHECK(rel[0].count == 0);
  CHECK(rel[0].bin_lo == 0.0);
  CHECK(rel[0].bin_hi == 0.5);
  CHECK(rel[1].count == 2);
  CHECK(rel[1].bin_hi == 1.0);

  const auto single = reliability_data(d_ece(constant_half_correct(0.8, 10)).table);
  int occupied = 0;
  for (const auto& rec : single) {
    if (rec.count == 0) continue;
    ++occupied;
    CHECK(rec.gap == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rec.mean_conf == doctest::Approx(0.8));
    CHECK(rec.mean_outcome == doctest::Approx(0.5));
  }
  CHECK(occupied == 1);
  for (std::size_t m = 0; m < single.size(); ++m) {
    CHECK(single[m].bin_lo == doctest::Approx(m / 10.0));
    CHECK(single[m].bin_hi == doctest::Approx((m + 1) / 10.0));
  }
}

TEST_CASE("detection_error rules") {
  CHECK(detection_error(0.3, true, ErrorRule::kIouBelowHalf));
  CHECK_FALSE(detection_error(0.5, false, ErrorRule::kIouBelowHalf));
  CHECK(detection_error(0.9, false, ErrorRule::kIncorrect));
  CHECK_FALSE(detection_error(0.1, true, ErrorRule::kIncorrect));
}

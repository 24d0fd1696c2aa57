#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "detcal/error.hpp"
#include "detcal/tcd.hpp"
#include "oracles.hpp"

using namespace detcal;
using detcal::testing::central_difference;
using detcal::testing::relative_error;

namespace {

TcdBatch make_batch(std::uint32_t l, std::uint32_t r, std::uint32_t k, std::vector<double> s,
                    std::vector<std::uint8_t> q) {
  TcdBatch b;
  b.images = l;
  b.locations = r;
  b.classes = k;
  b.confidences = std::move(s);
  b.targets = std::move(q);
  b.positives.resize(l);
  return b;
}

TcdBatch random_batch(std::mt19937_64& rng) {
  const auto l = static_cast<std::uint32_t>(1 + rng() % 3);
  const auto r = static_cast<std::uint32_t>(1 + rng() % 4);
  const auto k = static_cast<std::uint32_t>(1 + rng() % 3);
  TcdBatch b = make_batch(l, r, k, {}, {});
  b.confidences.resize(b.cells());
  b.targets.assign(b.cells(), 0);
  for (auto& v : b.confidences) v = detcal::testing::uniform(rng, 0, 1);
  for (std::size_t row = 0; row < std::size_t{l} * r; ++row) {
    const auto pick = rng() % (k + 1);  // k means background
    if (pick < k) b.targets[row * k + pick] = 1;
  }
  for (auto& img : b.positives) {
    const int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      img.add(detcal::testing::uniform(rng, 0, 1), detcal::testing::uniform(rng, 0, 1));
    }
  }
  return b;
}

bool away_from_kinks(const TcdBatch& b, double margin) {
  const std::size_t rows = std::size_t{b.images} * b.locations;
  for (std::size_t k = 0; k < b.classes; ++k) {
    double s = 0.0;
    double q = 0.0;
    for (std::size_t row = 0; row < rows; ++row) {
      s += b.confidences[row * b.classes + k];
      q += b.targets[row * b.classes + k];
    }
    if (std::fabs(s - q) / static_cast<double>(rows) <= margin) return false;
  }
  for (const auto& img : b.positives) {
    for (std::size_t n = 0; n < img.size(); ++n) {
      if (std::fabs(img.iou[n] - img.shat[n]) <= margin) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("d_cls hand cases") {
  CHECK(d_cls(make_batch(1, 1, 2, {1, 0}, {1, 0})) == 0.0);
  CHECK(d_cls(make_batch(1, 1, 2, {0.5, 0.5}, {1, 0})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d_cls(make_batch(2, 1, 1, {0.6, 0.2}, {1, 0})) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(d_cls(make_batch(0, 1, 1, {}, {})), InputError);
  CHECK_THROWS_AS(d_cls(make_batch(1, 0, 1, {}, {})), InputError);
}

TEST_CASE("d_det hand cases") {
  TcdBatch b = make_batch(1, 1, 1, {0.5}, {0});
  b.positives[0].add(0.7, 0.7);
  CHECK(d_det(b) == 0.0);
  b.positives[0] = {};
  b.positives[0].add(0.7, 0.9);
  CHECK(d_det(b) == doctest::Approx(0.2).epsilon(1e-12));

  TcdBatch two = make_batch(2, 1, 1, {0.5, 0.5}, {0, 0});
  two.positives[0].add(0.5, 0.9);
  two.positives[1].add(0.8, 0.8);
  two.positives[1].add(0.6, 0.4);
  CHECK(d_det(two) == doctest::Approx(0.25).epsilon(1e-12));

  // An image without positives does not dilute the average.
  TcdBatch three = make_batch(3, 1, 1, {0.5, 0.5, 0.5}, {0, 0, 0});
  three.positives[0] = two.positives[0];
  three.positives[2] = two.positives[1];
  CHECK(d_det(three) == doctest::Approx(0.25).epsilon(1e-12));

  TcdBatch none = make_batch(1, 1, 1, {0.5}, {0});
  const auto vg = tcd_loss(none);
  CHECK(vg.d_det == 0.0);
  CHECK(vg.grad_iou[0].empty());
}

TEST_CASE("combined loss") {
  TcdBatch b = make_batch(1, 1, 2, {0.5, 0.5}, {1, 0});
  b.positives[0].add(0.7, 0.9);
  const auto vg = tcd_loss(b);
  CHECK(vg.d_cls == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(vg.d_det == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(vg.loss == doctest::Approx(0.35).epsilon(1e-12));
  // sign(0.5 - 1) / (2 K L R) and sign(0.5 - 0) / (2 K L R)
  CHECK(vg.grad_confidences[0] == doctest::Approx(-0.25));
  CHECK(vg.grad_confidences[1] == doctest::Approx(0.25));
  CHECK(vg.grad_shat[0][0] == doctest::Approx(0.5));
  CHECK(vg.grad_iou[0][0] == doctest::Approx(-0.5));
}

TEST_CASE("calibrated batch has zero loss and gradients") {
  TcdBatch b = make_batch(2, 2, 2, {0.5, 0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 0.0}, {1, 0, 0, 1, 0, 0, 1, 0});
  b.positives[0].add(0.6, 0.6);
  b.positives[1].add(0.9, 0.9);
  const auto vg = tcd_loss(b);
  CHECK(vg.d_cls == 0.0);
  CHECK(vg.loss == 0.0);
  for (double g : vg.grad_confidences) CHECK(g == 0.0);
  for (const auto& v : vg.grad_shat) for (double g : v) CHECK(g == 0.0);
  for (const auto& v : vg.grad_iou) for (double g : v) CHECK(g == 0.0);
}

TEST_CASE("validation") {
  TcdBatch b = make_batch(1, 1, 2, {0.5, 0.5}, {1, 1});
  CHECK_THROWS_AS(b.validate(), InputError);  // two ones in a row
  b = make_batch(1, 1, 2, {0.5, 1.5}, {1, 0});
  CHECK_THROWS_AS(tcd_loss(b), InputError);
  b = make_batch(1, 1, 2, {0.5}, {1, 0});
  CHECK_THROWS_AS(tcd_loss(b), InputError);
  b = make_batch(1, 1, 2, {0.5, 0.5}, {2, 0});
  CHECK_THROWS_AS(tcd_loss(b), InputError);
}

TEST_CASE("tcd properties") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const TcdBatch b = random_batch(rng);
    const auto vg = tcd_loss(b);
    CHECK(vg.d_cls >= 0.0);
    CHECK(vg.d_cls <= 1.0);
    CHECK(vg.d_det >= 0.0);
    CHECK(vg.d_det <= 1.0);
    CHECK(vg.loss == doctest::Approx(0.5 * (vg.d_cls + vg.d_det)));

    // Doubling the batch.
    TcdBatch twice = b;
    twice.images *= 2;
    twice.confidences.insert(twice.confidences.end(), b.confidences.begin(), b.confidences.end());
    twice.targets.insert(twice.targets.end(), b.targets.begin(), b.targets.end());
    twice.positives.insert(twice.positives.end(), b.positives.begin(), b.positives.end());
    const auto vg2 = tcd_loss(twice);
    CHECK(vg2.d_cls == doctest::Approx(vg.d_cls).epsilon(1e-12));
    CHECK(vg2.d_det == doctest::Approx(vg.d_det).epsilon(1e-12));
    CHECK(vg2.loss == doctest::Approx(vg.loss).epsilon(1e-12));

    // Reversing location order and positive order.
    TcdBatch perm = b;
    const std::size_t rows = std::size_t{b.images} * b.locations;
    for (std::size_t row = 0; row < rows; ++row) {
      for (std::size_t k = 0; k < b.classes; ++k) {
        perm.confidences[row * b.classes + k] = b.confidences[(rows - 1 - row) * b.classes + k];
        perm.targets[row * b.classes + k] = b.targets[(rows - 1 - row) * b.classes + k];
      }
    }
    for (auto& img : perm.positives) {
      std::reverse(img.iou.begin(), img.iou.end());
      std::reverse(img.shat.begin(), img.shat.end());
    }
    CHECK(d_cls(perm) == doctest::Approx(vg.d_cls).epsilon(1e-12));
    CHECK(d_det(perm) == doctest::Approx(vg.d_det).epsilon(1e-12));
  }
}

TEST_CASE("tcd gradients match central differences") {
  std::mt19937_64 rng(29);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 150) {
    TcdBatch b = random_batch(rng);
    // Keep perturbed points inside [0, 1].
    for (auto& v : b.confidences) v = 0.01 + 0.98 * v;
    for (auto& img : b.positives) {
      for (auto& v : img.iou) v = 0.01 + 0.98 * v;
      for (auto& v : img.shat) v = 0.01 + 0.98 * v;
    }
    if (!away_from_kinks(b, 1e-3)) continue;
    const auto vg = tcd_loss(b);
    for (std::size_t i = 0; i < b.cells(); ++i) {
      auto f = [&](const std::vector<double>& x) {
        TcdBatch p = b;
        p.confidences = x;
        return tcd_loss(p).loss;
      };
      CHECK(relative_error(vg.grad_confidences[i], central_difference(f, b.confidences, i, h)) < 1e-4);
    }
    for (std::size_t l = 0; l < b.images; ++l) {
      for (std::size_t n = 0; n < b.positives[l].size(); ++n) {
        auto f_shat = [&](const std::vector<double>& x) {
          TcdBatch p = b;
          p.positives[l].shat = x;
          return tcd_loss(p).loss;
        };
        auto f_iou = [&](const std::vector<double>& x) {
          TcdBatch p = b;
          p.positives[l].iou = x;
          return tcd_loss(p).loss;
        };
        CHECK(relative_error(vg.grad_shat[l][n], central_difference(f_shat, b.positives[l].shat, n, h)) < 1e-4);
        CHECK(relative_error(vg.grad_iou[l][n], central_difference(f_iou, b.positives[l].iou, n, h)) < 1e-4);
      }
    }
    ++checked;
  }
}

TEST_CASE("box gradient chains through iou_grad") {
  const BBox pred{0, 0, 2, 2};
  const BBox target{1, 0.5, 3, 2.5};
  const auto g = chain_box_gradient(-0.5, pred, target);
  const auto direct = iou_grad(pred, target);
  for (int i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(-0.5 * direct[i]));
}

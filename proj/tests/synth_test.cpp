#include <doctest.h>

#include "detcal/error.hpp"
#include "detcal/io.hpp"
#include "detcal/matching.hpp"
#include "detcal/synth.hpp"

using namespace detcal;

TEST_CASE("curves") {
  CHECK(CalibrationCurve::identity()(0.3) == 0.3);
  CHECK(CalibrationCurve::constant_gap(0.2)(0.9) == doctest::Approx(0.7));
  CHECK(CalibrationCurve::constant_gap(0.2)(0.1) == 0.0);
  CHECK(CalibrationCurve::temperature(2.0)(0.9) == doctest::Approx(0.75));
}

TEST_CASE("matching reproduces the drawn flags") {
  SynthSpec spec;
  spec.detections = 3000;
  spec.seed = 5;
  spec.per_image = 37;
  const auto data = generate(spec);
  REQUIRE(data.bundle.detections.size() == 3000);
  REQUIRE(data.correct.size() == 3000);
  const auto results = match(data.bundle.detections, data.bundle.ground_truth);
  std::size_t gts = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(results[i].correct == data.correct[i]);
    if (data.correct[i]) {
      ++gts;
      CHECK(results[i].matched_iou >= 0.9);
    }
  }
  CHECK(gts == data.bundle.ground_truth.size());
  for (const auto& d : data.bundle.detections) {
    CHECK(d.score >= 0.0);
    CHECK(d.score <= 1.0);
    CHECK(data.bundle.categories.count(d.class_id) == 1);
    CHECK(data.bundle.images.count(d.image_id) == 1);
  }
}

TEST_CASE("fixed seed gives identical files") {
  SynthSpec spec;
  spec.detections = 500;
  spec.seed = 99;
  spec.curve = CalibrationCurve::temperature(2.0);
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(io::coco_detections_json(a.bundle.detections).dump() ==
        io::coco_detections_json(b.bundle.detections).dump());
  CHECK(io::coco_annotations_json(a.bundle).dump() == io::coco_annotations_json(b.bundle).dump());
  spec.seed = 100;
  CHECK(io::coco_detections_json(generate(spec).bundle.detections).dump() !=
        io::coco_detections_json(a.bundle.detections).dump());
}

TEST_CASE("calibration of synthetic detectors") {
  SynthSpec spec;
  spec.detections = 100000;
  spec.seed = 1;
  auto data = generate(spec);
  auto outcomes = scored_outcomes(match(data.bundle.detections, data.bundle.ground_truth));
  CHECK(d_ece(outcomes).value < 0.01);

  spec.curve = CalibrationCurve::constant_gap(0.2);
  spec.score_min = 0.2;
  data = generate(spec);
  outcomes = scored_outcomes(match(data.bundle.detections, data.bundle.ground_truth));
  CHECK(d_ece(outcomes).value == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("score range is honoured") {
  SynthSpec spec;
  spec.detections = 2000;
  spec.alpha = 2.0;
  spec.beta = 5.0;
  spec.score_min = 0.3;
  spec.score_max = 0.6;
  for (const auto& d : generate(spec).bundle.detections) {
    CHECK(d.score >= 0.3);
    CHECK(d.score <= 0.6);
  }
}

TEST_CASE("invalid parameters") {
  SynthSpec spec;
  spec.alpha = 0.0;
  CHECK_THROWS_AS(generate(spec), ParameterError);
  spec = {};
  spec.beta = -1.0;
  CHECK_THROWS_AS(generate(spec), ParameterError);
  spec = {};
  spec.detections = 0;
  CHECK_THROWS_AS(generate(spec), ParameterError);
  spec = {};
  spec.score_min = 0.7;
  spec.score_max = 0.2;
  CHECK_THROWS_AS(generate(spec), ParameterError);
  spec = {};
  spec.curve = CalibrationCurve::temperature(0.0);
  CHECK_THROWS_AS(generate(spec), ParameterError);
  spec = {};
  spec.classes = 0;
  CHECK_THROWS_AS(generate(spec), ParameterError);
}

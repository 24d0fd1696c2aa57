#include "commands.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include "detcal/error.hpp"
#include "detcal/kernels/kernels.hpp"
#include "detcal/matching.hpp"
#include "detcal/synth.hpp"
#include "detcal/tcd.hpp"

namespace detcal::cli {
namespace {

using io::Json;

void emit(const RunConfig& config, const io::Report& report) {
  const std::string text = io::render_report(report, config.format);
  if (config.out.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    io::write_file_atomic(config.out, text);
  }
}

void emit_svg(const RunConfig& config, std::span<const ReliabilityRecord> records,
              std::string_view title, std::string_view outcome_label) {
  if (config.svg.empty()) return;
  io::write_file_atomic(config.svg, io::reliability_svg(records, title, outcome_label));
}

const char* objective_name(Objective o) { return o == Objective::kNll ? "nll" : "dece"; }

const char* mode_name(UncertaintyMode m) {
  return m == UncertaintyMode::kCombined ? "combined" : "within";
}

MatchOptions match_options(const RunConfig& config) {
  return MatchOptions{config.gamma, config.min_score};
}

std::vector<ScoredOutcome> evaluate(const DatasetBundle& bundle, const RunConfig& config,
                                    std::string_view what) {
  if (bundle.detections.empty()) throw InputError(std::string(what) + ": no detections");
  const auto results = match(bundle.detections, bundle.ground_truth, match_options(config));
  auto outcomes = scored_outcomes(results, config.drop_duplicates);
  if (outcomes.empty()) {
    throw InputError(std::string(what) + ": no detections left after filtering");
  }
  return outcomes;
}

std::size_t count_correct(std::span<const ScoredOutcome> outcomes) {
  return static_cast<std::size_t>(std::count_if(
      outcomes.begin(), outcomes.end(), [](const ScoredOutcome& o) { return o.correct; }));
}

// True when every strict inequality between original scores survives scaling.
bool rank_order_preserved(std::span<const Detection> before, std::span<const Detection> after) {
  std::vector<std::size_t> order(before.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return before[a].score < before[b].score;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const std::size_t lo = order[i - 1];
    const std::size_t hi = order[i];
    if (before[lo].score < before[hi].score && !(after[lo].score < after[hi].score)) {
      return false;
    }
    if (before[lo].score == before[hi].score && after[lo].score != after[hi].score) {
      return false;
    }
  }
  return true;
}

Json settings_json(const RunConfig& config) {
  return Json{{"gamma", config.gamma},
              {"bins", config.bins},
              {"min_score", config.min_score},
              {"drop_duplicates", config.drop_duplicates}};
}

}  // namespace

void run_eval(const RunConfig& config, const EvalArgs& args) {
  const DatasetBundle bundle = io::load_bundle(args.detections, args.annotations);
  const auto outcomes = evaluate(bundle, config, args.detections);
  const CalibrationResult result = d_ece(outcomes, config.bins);

  io::Report report;
  report.summary = Json{{"metric", "d_ece"},
                        {"value", result.value},
                        {"detections", outcomes.size()},
                        {"correct", count_correct(outcomes)},
                        {"ground_truth", bundle.ground_truth.size()},
                        {"settings", settings_json(config)}};
  report.reliability = reliability_data(result.table);
  emit(config, report);
  emit_svg(config, report.reliability, "D-ECE " + io::format_number(result.value), "precision");
}

void run_calibrate(const RunConfig& config, const CalibrateArgs& args) {
  const DatasetBundle val = io::load_bundle(args.val_detections, args.val_annotations);
  const auto val_outcomes = evaluate(val, config, args.val_detections);

  FitOptions fit;
  fit.objective = config.objective;
  fit.bins = config.bins;
  const TemperatureModel model = fit_temperature(val_outcomes, fit);

  std::vector<ScoredOutcome> val_scaled = val_outcomes;
  for (ScoredOutcome& o : val_scaled) o.score = model.apply(o.score);

  Json summary{{"temperature", model.temperature},
               {"objective", objective_name(config.objective)},
               {"settings", settings_json(config)}};
  summary["validation"] = Json{{"detections", val_outcomes.size()},
                               {"d_ece_before", d_ece(val_outcomes, config.bins).value},
                               {"d_ece_after", d_ece(val_scaled, config.bins).value}};

  std::vector<Detection> test = io::load_coco_detections(args.test_detections);
  if (test.empty()) throw InputError(args.test_detections + ": no detections");
  std::vector<Detection> scaled = test;
  for (Detection& d : scaled) d.score = model.apply(d.score);
  const bool preserved = rank_order_preserved(test, scaled);

  Json test_json{{"detections", test.size()}, {"rank_order_preserved", preserved}};
  io::Report report;
  if (!args.test_annotations.empty()) {
    DatasetBundle before = io::load_bundle(args.test_detections, args.test_annotations);
    DatasetBundle after = before;
    after.detections = scaled;
    const auto before_outcomes = evaluate(before, config, args.test_detections);
    const auto after_outcomes = evaluate(after, config, args.test_detections);
    const CalibrationResult after_result = d_ece(after_outcomes, config.bins);
    test_json["d_ece_before"] = d_ece(before_outcomes, config.bins).value;
    test_json["d_ece_after"] = after_result.value;
    test_json["correct_before"] = count_correct(before_outcomes);
    test_json["correct_after"] = count_correct(after_outcomes);
    report.reliability = reliability_data(after_result.table);
  }
  summary["test"] = std::move(test_json);
  report.summary = std::move(summary);

  if (!args.model_out.empty()) {
    io::write_file_atomic(args.model_out, io::temperature_model_json(model).dump() + "\n");
  }
  if (!args.scaled_out.empty()) io::write_coco_detections(args.scaled_out, scaled);
  emit(config, report);
  if (!report.reliability.empty()) {
    emit_svg(config, report.reliability, "after temperature scaling", "precision");
  }
}

void run_tcd_eval(const RunConfig& config, const TcdEvalArgs& args) {
  if (config.format == io::ReportFormat::kCsv) {
    throw ParameterError("tcd-eval reports are JSON only");
  }
  const TcdBatch batch = io::load_tcd_batch(args.batch);
  const TcdValueGrad value = tcd_loss(batch);
  io::Report report;
  report.summary = Json{{"L", batch.images},
                        {"R", batch.locations},
                        {"K", batch.classes},
                        {"d_cls", value.d_cls},
                        {"d_det", value.d_det},
                        {"loss", value.loss}};
  if (args.gradients) {
    report.summary["gradients"] = Json{{"s", value.grad_confidences},
                                       {"shat", value.grad_shat},
                                       {"iou", value.grad_iou}};
  }
  emit(config, report);
}

void run_ict(const RunConfig& config, const IctArgs& args) {
  const McImage image = io::load_mc_passes(args.passes);
  IctOptions options;
  options.grouping.gamma = config.gamma;
  options.grouping.include_anchor = !args.strict_groups;
  options.grouping.normalize_aspect = args.normalize_aspect;
  options.mode = config.mode;
  options.kappa1 = config.kappa1;
  options.kappa2 = config.kappa2;
  const IctResult result = ict_pipeline(image, options);

  auto record = [&](const AnchorReport& a) {
    return Json{{"anchor",
                 Json{{"pass", image.passes[a.anchor.pass].index},
                      {"detection", a.anchor.detection}}},
                {"class", a.class_id},
                {"sbar", a.sbar},
                {"u", a.u},
                {"value", a.target.value},
                {"status", to_string(a.target.status)},
                {"group_size", a.group_size}};
  };
  Json targets = Json::array();
  Json anchors = Json::array();
  for (const AnchorReport& a : result.anchors) {
    anchors.push_back(record(a));
    if (a.target.status != TargetStatus::kRejected) targets.push_back(record(a));
  }

  io::Report report;
  report.summary = Json{{"image_id", image.image_id},
                        {"mode", mode_name(config.mode)},
                        {"gamma", config.gamma},
                        {"kappa1", config.kappa1},
                        {"kappa2", config.kappa2},
                        {"strict_groups", args.strict_groups},
                        {"targets", std::move(targets)},
                        {"anchors", std::move(anchors)}};

  if (!args.annotations.empty() && !result.anchors.empty()) {
    const io::AnnotationSet anns = io::load_coco_annotations(args.annotations);
    std::vector<GroundTruthBox> gts;
    for (const GroundTruthBox& g : anns.ground_truth) {
      if (g.image_id == image.image_id) gts.push_back(g);
    }
    // Match each pass on its own: U flags are per-pass predictions.
    std::vector<std::vector<MatchResult>> per_pass;
    for (const McPass& pass : image.passes) {
      per_pass.push_back(match(pass.detections, gts, MatchOptions{config.gamma, 0.0}));
    }
    std::vector<UncertaintyEntry> entries;
    for (std::size_t i = 0; i < result.anchors.size(); ++i) {
      const MemberRef ref = result.anchors[i].anchor;
      const MatchResult& m = per_pass[ref.pass][ref.detection];
      entries.push_back({result.uncertainties[i], detection_error(m.best_iou, m.correct, args.error_rule)});
    }
    const CalibrationResult duce = d_uce(entries, config.bins);
    report.summary["d_uce"] = Json{
        {"value", duce.value},
        {"error_rule", args.error_rule == ErrorRule::kIouBelowHalf ? "iou" : "match"},
        {"bins", config.bins}};
    report.reliability = reliability_data(duce.table);
    emit_svg(config, report.reliability, "D-UCE " + io::format_number(duce.value), "error");
  }
  emit(config, report);
}

void run_synth(const RunConfig& config, const SynthArgs& args) {
  if (config.format == io::ReportFormat::kCsv) {
    throw ParameterError("synth summaries are JSON only");
  }
  SynthSpec spec;
  spec.detections = args.detections;
  spec.classes = args.classes;
  spec.alpha = args.alpha;
  spec.beta = args.beta;
  spec.score_min = args.score_min;
  spec.score_max = args.score_max;
  spec.per_image = args.per_image;
  spec.seed = config.seed;
  if (args.curve == "identity") {
    spec.curve = CalibrationCurve::identity();
  } else if (args.curve == "gap") {
    spec.curve = CalibrationCurve::constant_gap(args.delta);
  } else if (args.curve == "temperature") {
    spec.curve = CalibrationCurve::temperature(args.curve_temperature);
  } else {
    throw ParameterError("unknown curve '" + args.curve + "'");
  }
  const SynthDataset data = generate(spec);

  Json anns = io::coco_annotations_json(data.bundle);
  anns["info"] = Json{{"generator", "detcal synth"},
                      {"rng", kSynthRngName},
                      {"seed", config.seed},
                      {"curve", args.curve},
                      {"detections", spec.detections}};
  io::write_coco_detections(args.out_detections, data.bundle.detections);
  io::write_file_atomic(args.out_annotations, anns.dump() + "\n");

  io::Report report;
  report.summary = Json{{"rng", kSynthRngName},
                        {"seed", config.seed},
                        {"detections", data.bundle.detections.size()},
                        {"ground_truth", data.bundle.ground_truth.size()},
                        {"images", data.bundle.images.size()}};
  emit(config, report);
}

}  // namespace detcal::cli

// detcal: calibration metrics, temperature scaling, TCD loss evaluation and
// MC-pass soft pseudo-targets for object detectors.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "commands.hpp"
#include "detcal/error.hpp"

namespace {

using detcal::cli::RunConfig;

void add_format(CLI::App* cmd, RunConfig& config) {
  static const std::map<std::string, detcal::io::ReportFormat> formats{
      {"json", detcal::io::ReportFormat::kJson}, {"csv", detcal::io::ReportFormat::kCsv}};
  cmd->add_option("--format", config.format, "Report format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
      ->option_text("{json,csv} [json]");
  cmd->add_flag_callback(
      "--csv", [&config] { config.format = detcal::io::ReportFormat::kCsv; },
      "Shorthand for --format csv");
  cmd->add_option("-o,--out", config.out, "Report path (default: stdout)");
}

void add_matching(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--gamma", config.gamma, "IoU threshold for a correct detection")
      ->capture_default_str();
  cmd->add_option("--bins", config.bins, "Number of equal-width bins")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-score", config.min_score, "Drop detections scoring below this")
      ->capture_default_str();
  cmd->add_flag("--drop-duplicates", config.drop_duplicates,
                "Leave detections that lost their GT to a higher-scoring one out of D-ECE");
  cmd->add_option("--svg", config.svg, "Also write a reliability diagram");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration toolkit for object detectors", "detcal"};
  app.require_subcommand(1);

  RunConfig config;

  detcal::cli::EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "D-ECE and reliability data of a detection set");
  eval->add_option("--dets", eval_args.detections, "COCO detections JSON")->required();
  eval->add_option("--gts", eval_args.annotations, "COCO annotations JSON")->required();
  add_matching(eval, config);
  add_format(eval, config);

  detcal::cli::CalibrateArgs cal_args;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Fit a temperature on a validation split, apply it to a test split");
  calibrate->add_option("--val-dets", cal_args.val_detections)->required();
  calibrate->add_option("--val-gts", cal_args.val_annotations)->required();
  calibrate->add_option("--test-dets", cal_args.test_detections)->required();
  calibrate->add_option("--test-gts", cal_args.test_annotations,
                        "Enables before/after D-ECE on the test split");
  calibrate->add_option("--model-out", cal_args.model_out, "Write {\"temperature\": T}");
  calibrate->add_option("--scaled-out", cal_args.scaled_out, "Write rescaled test detections");
  static const std::map<std::string, detcal::Objective> objectives{
      {"nll", detcal::Objective::kNll}, {"dece", detcal::Objective::kDEce}};
  calibrate->add_option("--objective", config.objective, "Fit objective: nll or dece")
      ->transform(CLI::CheckedTransformer(objectives, CLI::ignore_case))
      ->option_text("{nll,dece} [nll]");
  add_matching(calibrate, config);
  add_format(calibrate, config);

  detcal::cli::TcdEvalArgs tcd_args;
  CLI::App* tcd = app.add_subcommand("tcd-eval", "Evaluate the TCD loss on a serialized batch");
  tcd->add_option("batch", tcd_args.batch, "Batch file (JSON or TCB1 binary)")->required();
  tcd->add_flag("--grad", tcd_args.gradients, "Include gradients");
  add_format(tcd, config);

  detcal::cli::IctArgs ict_args;
  CLI::App* ict = app.add_subcommand("ict", "Soft pseudo-targets from MC inference passes");
  ict->add_option("passes", ict_args.passes, "MC-pass JSON")->required();
  ict->add_option("--gamma", config.gamma, "Grouping IoU threshold")->capture_default_str();
  ict->add_option("--kappa1", config.kappa1)->capture_default_str();
  ict->add_option("--kappa2", config.kappa2)->capture_default_str();
  static const std::map<std::string, detcal::UncertaintyMode> modes{
      {"combined", detcal::UncertaintyMode::kCombined},
      {"within", detcal::UncertaintyMode::kWithinOnly}};
  ict->add_option("--mode", config.mode, "Uncertainty: combined or within")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
      ->option_text("{combined,within} [combined]");
  ict->add_flag("--strict-groups", ict_args.strict_groups,
                "Exclude the anchor from its own group");
  ict->add_flag("--normalize-aspect", ict_args.normalize_aspect,
                "Min-max normalise aspect ratios per image");
  ict->add_option("--gts", ict_args.annotations, "COCO annotations; enables D-UCE");
  static const std::map<std::string, detcal::ErrorRule> rules{
      {"iou", detcal::ErrorRule::kIouBelowHalf}, {"match", detcal::ErrorRule::kIncorrect}};
  ict->add_option("--error-rule", ict_args.error_rule, "D-UCE error: iou or match")
      ->transform(CLI::CheckedTransformer(rules, CLI::ignore_case))
      ->option_text("{iou,match} [iou]");
  ict->add_option("--bins", config.bins)->capture_default_str()->check(CLI::PositiveNumber);
  ict->add_option("--svg", config.svg, "Also write the D-UCE diagram");
  add_format(ict, config);

  detcal::cli::SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic detector with a known calibration curve");
  synth->add_option("--out-dets", synth_args.out_detections)->required();
  synth->add_option("--out-gts", synth_args.out_annotations)->required();
  synth->add_option("-n,--detections", synth_args.detections)->capture_default_str();
  synth->add_option("--classes", synth_args.classes)->capture_default_str();
  synth->add_option("--curve", synth_args.curve, "identity, gap or temperature")
      ->check(CLI::IsMember({"identity", "gap", "temperature"}))
      ->capture_default_str();
  synth->add_option("--delta", synth_args.delta, "Gap of the gap curve")->capture_default_str();
  synth->add_option("--curve-temperature", synth_args.curve_temperature,
                    "True temperature of the temperature curve")
      ->capture_default_str();
  synth->add_option("--alpha", synth_args.alpha)->capture_default_str();
  synth->add_option("--beta", synth_args.beta)->capture_default_str();
  synth->add_option("--score-min", synth_args.score_min)->capture_default_str();
  synth->add_option("--score-max", synth_args.score_max)->capture_default_str();
  synth->add_option("--per-image", synth_args.per_image)->capture_default_str();
  synth->add_option("--seed", config.seed)->capture_default_str();
  add_format(synth, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (eval->parsed()) detcal::cli::run_eval(config, eval_args);
    if (calibrate->parsed()) detcal::cli::run_calibrate(config, cal_args);
    if (tcd->parsed()) detcal::cli::run_tcd_eval(config, tcd_args);
    if (ict->parsed()) detcal::cli::run_ict(config, ict_args);
    if (synth->parsed()) detcal::cli::run_synth(config, synth_args);
  } catch (const detcal::ParseError& e) {
    std::cerr << "error: parse: " << e.what() << "\n";
    return 1;
  } catch (const detcal::ParameterError& e) {
    std::cerr << "error: parameter: " << e.what() << "\n";
    return 1;
  } catch (const detcal::InputError& e) {
    std::cerr << "error: input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "detcal/io.hpp"
#include "detcal/metrics.hpp"
#include "detcal/posthoc.hpp"
#include "detcal/uncertainty.hpp"

namespace detcal::cli {

// Shared by every subcommand. Defaults are the documented ones.
struct RunConfig {
  double gamma = 0.5;
  int bins = kDefaultBins;
  double min_score = 0.0;
  bool drop_duplicates = false;
  double kappa1 = kDefaultKappa1;
  double kappa2 = kDefaultKappa2;
  Objective objective = Objective::kNll;
  UncertaintyMode mode = UncertaintyMode::kCombined;
  io::ReportFormat format = io::ReportFormat::kJson;
  std::string out;  // empty: stdout
  std::string svg;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string detections;
  std::string annotations;
};

struct CalibrateArgs {
  std::string val_detections;
  std::string val_annotations;
  std::string test_detections;
  std::string test_annotations;  // optional
  std::string model_out;         // optional {"temperature": T}
  std::string scaled_out;        // optional rescaled test detections
};

struct TcdEvalArgs {
  std::string batch;
  bool gradients = false;
};

struct IctArgs {
  std::string passes;
  std::string annotations;  // optional, enables D-UCE
  bool strict_groups = false;
  bool normalize_aspect = false;
  ErrorRule error_rule = ErrorRule::kIouBelowHalf;
};

struct SynthArgs {
  std::string out_detections;
  std::string out_annotations;
  std::size_t detections = 10000;
  int classes = 8;
  std::string curve = "identity";
  double delta = 0.2;
  double curve_temperature = 2.0;
  double alpha = 1.0;
  double beta = 1.0;
  double score_min = 0.0;
  double score_max = 1.0;
  std::size_t per_image = 100;
};

// Each command writes its report to config.out (or stdout) and throws
// detcal::Error on failure.
void run_eval(const RunConfig& config, const EvalArgs& args);
void run_calibrate(const RunConfig& config, const CalibrateArgs& args);
void run_tcd_eval(const RunConfig& config, const TcdEvalArgs& args);
void run_ict(const RunConfig& config, const IctArgs& args);
void run_synth(const RunConfig& config, const SynthArgs& args);

}  // namespace detcal::cli

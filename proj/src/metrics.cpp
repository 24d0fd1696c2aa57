#include "detcal/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "detcal/error.hpp"
#include "detcal/kernels/kernels.hpp"

namespace detcal {
namespace {

void check_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InputError(std::string(what) + " " + std::to_string(v) +
                     " outside [0, 1]");
  }
}

}  // namespace

double BinTable::lower_edge(int m) const {
  return static_cast<double>(m) / size();
}

double BinTable::upper_edge(int m) const {
  return static_cast<double>(m + 1) / size();
}

double BinTable::calibration_error() const {
  if (total == 0) return 0.0;
  double error = 0.0;
  for (const Bin& bin : bins) {
    error += static_cast<double>(bin.count) / static_cast<double>(total) * bin.gap;
  }
  return error;
}

BinTable bin_values(std::span<const double> values,
                    std::span<const double> outcomes, int bins) {
  if (bins < 1) throw ParameterError("bin count must be >= 1");
  if (values.empty()) throw InputError("cannot bin an empty sample list");
  if (values.size() != outcomes.size()) {
    throw InputError("values and outcomes differ in length");
  }
  for (double v : values) check_unit_interval(v, "binned value");

  std::vector<std::int32_t> index(values.size());
  kernels::active().bin_indices(values, bins, index);

  std::vector<double> value_sum(bins, 0.0);
  std::vector<double> outcome_sum(bins, 0.0);
  BinTable table;
  table.bins.resize(bins);
  table.total = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto m = static_cast<std::size_t>(index[i]);
    ++table.bins[m].count;
    value_sum[m] += values[i];
    outcome_sum[m] += outcomes[i];
  }
  for (int m = 0; m < bins; ++m) {
    Bin& bin = table.bins[m];
    if (bin.count == 0) continue;
    const auto n = static_cast<double>(bin.count);
    bin.mean_conf = value_sum[m] / n;
    bin.mean_outcome = outcome_sum[m] / n;
    bin.gap = std::fabs(bin.mean_outcome - bin.mean_conf);
  }
  return table;
}

CalibrationResult ece(std::span<const ClsSample> samples, int bins) {
  if (samples.empty()) throw InputError("ECE of an empty sample list");
  std::vector<double> conf;
  std::vector<double> acc;
  conf.reserve(samples.size());
  acc.reserve(samples.size());
  for (const ClsSample& s : samples) {
    conf.push_back(s.confidence);
    acc.push_back(s.predicted == s.label ? 1.0 : 0.0);
  }
  CalibrationResult result{0.0, bin_values(conf, acc, bins)};
  result.value = result.table.calibration_error();
  return result;
}

CalibrationResult d_ece(std::span<const ScoredOutcome> detections, int bins) {
  if (detections.empty()) throw InputError("D-ECE of an empty detection list");
  std::vector<double> conf;
  std::vector<double> prec;
  conf.reserve(detections.size());
  prec.reserve(detections.size());
  for (const ScoredOutcome& d : detections) {
    conf.push_back(d.score);
    prec.push_back(d.correct ? 1.0 : 0.0);
  }
  CalibrationResult result{0.0, bin_values(conf, prec, bins)};
  result.value = result.table.calibration_error();
  return result;
}

CalibrationResult d_uce(std::span<const UncertaintyEntry> entries, int bins) {
  if (entries.empty()) throw InputError("D-UCE of an empty list");
  std::vector<double> unc;
  std::vector<double> err;
  unc.reserve(entries.size());
  err.reserve(entries.size());
  for (const UncertaintyEntry& e : entries) {
    unc.push_back(e.uncertainty);
    err.push_back(e.error ? 1.0 : 0.0);
  }
  CalibrationResult result{0.0, bin_values(unc, err, bins)};
  result.value = result.table.calibration_error();
  return result;
}

bool detection_error(double best_iou, bool correct, ErrorRule rule) {
  switch (rule) {
    case ErrorRule::kIouBelowHalf:
      return best_iou < 0.5;
    case ErrorRule::kIncorrect:
      return !correct;
  }
  return !correct;
}

std::vector<ReliabilityRecord> reliability_data(const BinTable& table) {
  std::vector<ReliabilityRecord> records;
  records.reserve(table.bins.size());
  for (int m = 0; m < table.size(); ++m) {
    const Bin& bin = table.bins[m];
    records.push_back({table.lower_edge(m), table.upper_edge(m), bin.count,
                       bin.mean_conf, bin.mean_outcome, bin.gap});
  }
  return records;
}

}  // namespace detcal

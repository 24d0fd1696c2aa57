#pragma once

// Binned calibration metrics: ECE for classifiers, D-ECE for detectors and
// D-UCE for uncertainty estimates, plus the per-bin data behind reliability
// diagrams.
//
// All metrics use M equal-width bins over [0, 1]. Bin m (1-based) covers
// ((m-1)/M, m/M]; the value 0.0 belongs to the first bin. Each metric is
//
//   sum_m |I(m)| / |D| * |outcome(m) - value(m)|
//
// where value(m) is the mean binned quantity (confidence or uncertainty) and
// outcome(m) the mean outcome (accuracy, precision or error) of bin m.

#include <cstddef>
#include <span>
#include <vector>

namespace detcal {

inline constexpr int kDefaultBins = 10;

/// A classifier prediction.
struct ClsSample {
  double confidence = 0.0;
  int predicted = 0;
  int label = 0;
};

/// A detection confidence with its correctness indicator U.
struct ScoredOutcome {
  double score = 0.0;
  bool correct = false;
};

struct UncertaintyEntry {
  double uncertainty = 0.0;
  bool error = false;
};

struct Bin {
  std::size_t count = 0;
  double mean_conf = 0.0;
  double mean_outcome = 0.0;
  double gap = 0.0;
};

/// Per-bin statistics. Empty bins keep all means at 0 and carry no weight.
struct BinTable {
  std::vector<Bin> bins;
  std::size_t total = 0;

  int size() const { return static_cast<int>(bins.size()); }
  /// Lower/upper edge of zero-based bin `m`: m/M and (m+1)/M.
  double lower_edge(int m) const;
  double upper_edge(int m) const;
  /// Count-weighted mean gap, i.e. the calibration error.
  double calibration_error() const;
};

struct CalibrationResult {
  double value = 0.0;
  BinTable table;
};

/// Bins `values` (each in [0, 1]) and averages the paired `outcomes`.
/// Throws InputError on empty or mismatched input, ParameterError on bins < 1.
BinTable bin_values(std::span<const double> values,
                    std::span<const double> outcomes, int bins);

CalibrationResult ece(std::span<const ClsSample> samples,
                      int bins = kDefaultBins);

CalibrationResult d_ece(std::span<const ScoredOutcome> detections,
                        int bins = kDefaultBins);

/// Bins by uncertainty; outcome is the per-detection error indicator.
CalibrationResult d_uce(std::span<const UncertaintyEntry> entries,
                        int bins = kDefaultBins);

/// How a detection's error indicator for D-UCE is derived.
enum class ErrorRule {
  // 1[IoU with the best-overlapping ground truth < 0.5], class ignored.
  kIouBelowHalf,
  // 1 - U from the matching step.
  kIncorrect,
};

bool detection_error(double best_iou, bool correct, ErrorRule rule);

struct ReliabilityRecord {
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  std::size_t count = 0;
  double mean_conf = 0.0;
  double mean_outcome = 0.0;
  double gap = 0.0;
};

std::vector<ReliabilityRecord> reliability_data(const BinTable& table);

}  // namespace detcal

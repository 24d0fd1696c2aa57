#pragma once

// On-disk formats.
//
// COCO detections:  [{"image_id", "category_id", "bbox": [x, y, w, h], "score"}]
// COCO annotations: {"images": [{"id", "width", "height"}],
//                    "annotations": [{"image_id", "category_id", "bbox"}],
//                    "categories": [{"id", "name"}]}
// TCD batch (JSON): {"L", "R", "K", "s": [L*R*K], "q": [L*R*K],
//                    "positives": [[{"iou", "shat"}, ...] per image]}
// TCD batch (binary, little-endian): "TCB1", u32 L, u32 R, u32 K,
//                    f32 s[L*R*K], u8 q[L*R*K], then per image
//                    u32 count followed by count (f32 iou, f32 shat) pairs.
// MC passes:        {"image_id", "width", "height",
//                    "passes": [{"n", "detections": [{"bbox", "class", "score"}]}]}
//
// Boxes are COCO [x, y, w, h] on disk and corner form in memory. Unknown keys
// are ignored. Schema violations raise ParseError naming the file and the
// offending key path (or byte offset for syntax errors).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "detcal/dataset.hpp"
#include "detcal/metrics.hpp"
#include "detcal/posthoc.hpp"
#include "detcal/tcd.hpp"
#include "detcal/uncertainty.hpp"

namespace detcal::io {

using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// -- COCO ------------------------------------------------------------------

std::vector<Detection> parse_coco_detections(std::string_view text,
                                             std::string_view source = "<memory>");
std::vector<Detection> load_coco_detections(const std::filesystem::path& path);

struct AnnotationSet {
  std::vector<GroundTruthBox> ground_truth;
  std::map<int, std::string> categories;
  std::map<ImageId, ImageInfo> images;
};

AnnotationSet parse_coco_annotations(std::string_view text,
                                     std::string_view source = "<memory>");
AnnotationSet load_coco_annotations(const std::filesystem::path& path);

/// Loads both files and checks that every detection references a known image
/// and category.
DatasetBundle load_bundle(const std::filesystem::path& detections,
                          const std::filesystem::path& annotations);

Json coco_detections_json(std::span<const Detection> detections);
Json coco_annotations_json(const DatasetBundle& bundle);
void write_coco_detections(const std::filesystem::path& path,
                           std::span<const Detection> detections);
void write_coco_annotations(const std::filesystem::path& path,
                            const DatasetBundle& bundle);

// -- TCD batches -------------------------------------------------------------

enum class TcdEncoding { kJson, kBinary };

inline constexpr std::string_view kTcdMagic = "TCB1";

Json tcd_batch_json(const TcdBatch& batch);
TcdBatch parse_tcd_batch_json(std::string_view text,
                              std::string_view source = "<memory>");
/// Confidences and positives are narrowed to 32-bit floats.
std::string encode_tcd_batch(const TcdBatch& batch);
TcdBatch decode_tcd_batch(std::string_view bytes,
                          std::string_view source = "<memory>");
/// Detects the binary format by its magic bytes.
TcdBatch load_tcd_batch(const std::filesystem::path& path);
void write_tcd_batch(const std::filesystem::path& path, const TcdBatch& batch,
                     TcdEncoding encoding = TcdEncoding::kJson);

// -- MC passes ---------------------------------------------------------------

Json mc_passes_json(const McImage& image);
McImage parse_mc_passes(std::string_view text, std::string_view source = "<memory>");
McImage load_mc_passes(const std::filesystem::path& path);
void write_mc_passes(const std::filesystem::path& path, const McImage& image);

// -- Reports -----------------------------------------------------------------

enum class ReportFormat { kJson, kCsv };

struct Report {
  Json summary = Json::object();
  std::vector<ReliabilityRecord> reliability;
};

inline constexpr std::string_view kReliabilityCsvHeader =
    "bin_lo,bin_hi,count,mean_conf,mean_outcome,gap";

Json reliability_json(std::span<const ReliabilityRecord> records);
std::string reliability_csv(std::span<const ReliabilityRecord> records);

/// JSON: the summary with the reliability table under "reliability".
/// CSV: the reliability table only.
std::string render_report(const Report& report, ReportFormat format);
void write_report(const std::filesystem::path& path, ReportFormat format,
                  const Report& report);

Json temperature_model_json(const TemperatureModel& model);
TemperatureModel parse_temperature_model(std::string_view text,
                                         std::string_view source = "<memory>");

/// Standalone SVG bar chart of per-bin outcome against the diagonal, with
/// the gap to perfect calibration drawn on top of each bar.
std::string reliability_svg(std::span<const ReliabilityRecord> records,
                            std::string_view title, std::string_view outcome_label);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

}  // namespace detcal::io

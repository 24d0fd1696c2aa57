#pragma once

#include <map>
#include <string>
#include <vector>

#include "detcal/matching.hpp"

namespace detcal {

struct ImageInfo {
  ImageId id = 0;
  double width = 0.0;
  double height = 0.0;

  bool operator==(const ImageInfo&) const = default;
};

/// Detections plus the annotation side of a COCO-style dataset.
struct DatasetBundle {
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truth;
  std::map<int, std::string> categories;  // category id -> name
  std::map<ImageId, ImageInfo> images;

  bool operator==(const DatasetBundle&) const = default;
};

}  // namespace detcal

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pc2depth/inference.hpp"

namespace pc2depth {

/// Oriented 3D box; yaw rotates the box about the scene's z axis.
struct DetectionBox {
  std::array<double, 3> center{};
  std::array<double, 3> size{1, 1, 1};
  double yaw = 0.0;

  // Filled by detect_zero_shot.
  std::optional<std::size_t> label;
  double score = 0.0;
  bool empty = false;
};

/// True when `p` lies inside the box (inclusive faces).
bool box_contains(const DetectionBox& box, const Point3f& p);

/// Points of `scene` inside `box`, in scene order.
PointCloud crop_box(const PointCloud& scene, const DetectionBox& box);

/// Reads [{"center": [x,y,z], "size": [dx,dy,dz], "yaw": r}, ...].
std::vector<DetectionBox> parse_boxes_json(std::string_view text, const std::string& source = "<memory>");
std::vector<DetectionBox> load_boxes(const std::filesystem::path& path);
/// Writes the box list including "label", "score" and "empty".
std::string boxes_to_json(const std::vector<DetectionBox>& boxes);

struct DetectionConfig {
  PipelineConfig pipeline;  // pipeline.points is the per-crop sample size
};

/// Classifies the contents of every box. Each crop is normalised on its own
/// and sampled to `pipeline.points` with seed `pipeline.seed + box index`.
/// Boxes with no interior points come back unlabelled and flagged empty.
/// Provider keys use the box index as the item.
std::vector<DetectionBox> detect_zero_shot(const PointCloud& scene,
                                           const std::vector<DetectionBox>& boxes,
                                           const EmbeddingMatrix& class_weights,
                                           EmbeddingProvider& provider,
                                           const DetectionConfig& cfg);

}  // namespace pc2depth

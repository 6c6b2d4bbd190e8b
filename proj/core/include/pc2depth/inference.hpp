#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pc2depth/embedding.hpp"
#include "pc2depth/projection.hpp"
#include "pc2depth/providers.hpp"
#include "pc2depth/view_transform.hpp"

namespace pc2depth {

/// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

struct ClassificationResult {
  std::vector<double> logits;                        // K
  std::size_t predicted = 0;
  std::vector<std::vector<double>> per_view_logits;  // M x K
};

/// logits = sum_i alpha_i * f_i . W^T
ClassificationResult zero_shot_classify(const std::vector<ViewFeature>& features,
                                        const EmbeddingMatrix& class_weights,
                                        std::span<const double> alpha);

/// Per-pixel class logits, K innermost.
struct PixelLogits {
  int height = 0;
  int width = 0;
  std::size_t classes = 0;
  std::vector<float> data;

  std::span<const float> at(int u, int v) const {
    return {data.data() + (static_cast<std::size_t>(u) * width + v) * classes, classes};
  }
};

PixelLogits segment_pixels(const DenseFeature& dense, const EmbeddingMatrix& part_weights);

enum class BackProjectFallback { AllViews, UniformPrior };

struct BackProjectOptions {
  BackProjectFallback fallback = BackProjectFallback::AllViews;
  bool average_softmax = false;  // average per-view softmax instead of raw logits
};

struct SegmentationResult {
  std::size_t points = 0;
  std::size_t classes = 0;
  std::vector<double> logits;           // N x K
  std::vector<std::int32_t> labels;     // argmax per point
  std::vector<std::uint32_t> coverage;  // views in which the point was visible

  std::span<const double> row(std::size_t n) const {
    return {logits.data() + n * classes, classes};
  }
};

/// Averages each point's pixel logits over the views where it is visible.
/// Record (u, v) at grid resolution is scaled to the logit map resolution.
SegmentationResult back_project(const std::vector<PixelLogits>& pixel_logits,
                                const std::vector<ProjectionRecord>& records,
                                std::size_t point_count, const BackProjectOptions& opts = {});

struct PipelineConfig {
  GridConfig grid;
  ViewSet views = make_view_set(ViewPreset::TenView);
  std::size_t points = 1024;  // sample size for classification; 0 keeps every point
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// normalize -> sample -> project -> encode -> classify.
ClassificationResult classify_point_cloud(const PointCloud& pc, const PipelineConfig& cfg,
                                          const EmbeddingMatrix& class_weights,
                                          EmbeddingProvider& provider,
                                          std::optional<std::size_t> item = std::nullopt);

/// normalize -> project -> dense encode -> pixel logits -> back-project.
/// Every input point receives a label.
SegmentationResult segment_point_cloud(const PointCloud& pc, const ViewSet& views,
                                       const GridConfig& grid,
                                       const EmbeddingMatrix& part_weights,
                                       EmbeddingProvider& provider,
                                       const BackProjectOptions& opts = {},
                                       unsigned threads = 1);

/// Mean IoU over `parts`; a part absent from both prediction and truth counts as 1.
double instance_iou(std::span<const std::int32_t> predicted,
                    std::span<const std::int32_t> truth, std::span<const std::int32_t> parts);

struct InstanceLabels {
  std::size_t category = 0;
  std::vector<std::int32_t> predicted;
  std::vector<std::int32_t> truth;
};

/// Instance-averaged mIoU. Labels outside an instance's part set are a domain error.
double compute_miou(const std::vector<InstanceLabels>& instances,
                    const std::map<std::size_t, std::vector<std::int32_t>>& parts_per_class);

// "SEGL", u32 N, u32 K, N*K f32 logits.
std::vector<std::uint8_t> encode_segl(const SegmentationResult& r);
SegmentationResult decode_segl(std::span<const std::uint8_t> bytes,
                               const std::string& source = "<memory>");
void save_segl(const SegmentationResult& r, const std::filesystem::path& path);

}  // namespace pc2depth

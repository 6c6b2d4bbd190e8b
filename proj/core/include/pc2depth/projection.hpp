#pragma once

// Point cloud -> depth map projection: quantize, densify, smooth, squeeze.

#include <array>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "pc2depth/point_cloud.hpp"
#include "pc2depth/view_transform.hpp"

namespace pc2depth {

using Extent3 = std::array<int, 3>;
using Sigma3 = std::array<double, 3>;

struct GridConfig {
  int height = 112;
  int width = 112;
  int depth = 8;
  double scale = 0.7;  // fraction of the grid the shape occupies, in (0,1]
  Extent3 pool_window{6, 6, 2};
  Extent3 gauss_size{3, 3, 1};
  std::optional<Sigma3> gauss_sigma;  // unset: size/4 per axis
  int out_height = 224;
  int out_width = 224;
  std::optional<double> visibility_epsilon;  // unset: 1.5 / depth

  Sigma3 resolved_sigma() const;
  double resolved_visibility_epsilon() const;

  /// Throws a domain error for non-positive sizes, even Gaussian sizes, or
  /// a scale outside (0,1].
  void validate() const;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// H x W x D grid of depth values with an explicit occupancy mask. The depth
/// index k is innermost. Unoccupied cells hold kEmpty and carry no depth.
class VoxelGrid {
 public:
  static constexpr float kEmpty = std::numeric_limits<float>::infinity();

  VoxelGrid() = default;
  VoxelGrid(int height, int width, int depth);

  int height() const { return h_; }
  int width() const { return w_; }
  int depth() const { return d_; }
  std::size_t cell_count() const { return values_.size(); }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * w_ + j) * d_ + k;
  }
  bool occupied(int i, int j, int k) const { return occupied_[index(i, j, k)] != 0; }
  float value(int i, int j, int k) const { return values_[index(i, j, k)]; }

  void set(int i, int j, int k, float v);
  void clear(int i, int j, int k);

  std::size_t occupied_count() const;

  const std::vector<float>& values() const { return values_; }
  const std::vector<std::uint8_t>& occupancy() const { return occupied_; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  friend VoxelGrid densify(const VoxelGrid&, const Extent3&);
  friend VoxelGrid smooth(const VoxelGrid&, const Extent3&, const Sigma3&);

  int h_ = 0, w_ = 0, d_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> occupied_;
};

/// Depth image. Foreground intensity is 1 - depth (near is bright);
/// background pixels have depth 1 and intensity 0.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<float> depth;
  std::vector<float> intensity;
  std::vector<std::uint8_t> background;

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(u) * width + v; }
  std::size_t foreground_count() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

struct RecordEntry {
  std::uint16_t u = 0;  // row index at grid resolution
  std::uint16_t v = 0;  // column index at grid resolution
  float z = 0.f;        // normalised depth of the point
  bool visible = false;

  friend bool operator==(const RecordEntry&, const RecordEntry&) = default;
};

/// Where each input point landed in one view, at grid resolution.
struct ProjectionRecord {
  int grid_height = 0;
  int grid_width = 0;
  std::vector<RecordEntry> entries;

  std::size_t size() const { return entries.size(); }
  friend bool operator==(const ProjectionRecord&, const ProjectionRecord&) = default;
};

struct QuantizeResult {
  VoxelGrid grid;
  ProjectionRecord record;
};

/// Ceil-indexed placement with centring offsets,
/// keeping the minimum z per voxel. Coordinates must lie in [0,1].
QuantizeResult quantize(const PointCloud& pc, const GridConfig& cfg);

/// Occupancy-aware minimum pooling. The window on an axis of size w covers
/// offsets [-floor(w/2), ceil(w/2)-1]; empty neighbourhoods stay empty.
VoxelGrid densify(const VoxelGrid& g, const Extent3& window);

/// Normalised Gaussian convolution over occupied cells only. Occupancy is
/// unchanged. Sizes must be odd, sigmas positive.
VoxelGrid smooth(const VoxelGrid& g, const Extent3& size, const Sigma3& sigma);

/// Column-wise minimum over occupied cells at grid resolution.
DepthMap squeeze_native(const VoxelGrid& g);

/// Bilinear resize of depth (half-pixel centres), nearest-neighbour
/// background mask; intensity is recomputed from the resized depth.
DepthMap upsample(const DepthMap& map, int out_height, int out_width);

DepthMap squeeze(const VoxelGrid& g, int out_height, int out_width);

/// Sets each entry's visible flag: |z - depth(u, v)| <= epsilon on the native map.
void mark_visibility(ProjectionRecord& record, const DepthMap& native, double epsilon);

/// Accumulated wall time per pipeline stage.
struct StageTimes {
  std::chrono::nanoseconds quantize{0};
  std::chrono::nanoseconds densify{0};
  std::chrono::nanoseconds smooth{0};
  std::chrono::nanoseconds squeeze{0};
  std::chrono::nanoseconds upsample{0};

  StageTimes& operator+=(const StageTimes& o);
};

struct ViewProjection {
  DepthMap map;     // at out_size, or native when upsampling is skipped
  DepthMap native;  // at grid resolution
  ProjectionRecord record;
};

struct ProjectOptions {
  unsigned threads = 1;
  bool upsample = true;
};

ViewProjection project_view(const PointCloud& pc, const ViewTransform& view,
                            const GridConfig& cfg, bool do_upsample = true,
                            StageTimes* times = nullptr);

struct MultiViewProjection {
  std::vector<DepthMap> maps;
  std::vector<ProjectionRecord> records;
  std::vector<DepthMap> native_maps;
};

/// Projects every view of `vs`, fanning views out across `opts.threads`
/// workers. Output order follows the view order.
MultiViewProjection project_views(const PointCloud& pc, const ViewSet& vs,
                                  const GridConfig& cfg, const ProjectOptions& opts = {},
                                  std::vector<StageTimes>* per_view_times = nullptr);

}  // namespace pc2depth

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace pc2depth {

struct Point3f {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;

  friend bool operator==(const Point3f&, const Point3f&) = default;
};

/// A set of 3D points with optional per-point part labels.
///
/// Coordinates are always finite. When `labels` is engaged it holds exactly
/// one non-negative id per point.
struct PointCloud {
  std::vector<Point3f> points;
  std::optional<std::vector<std::int32_t>> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws a domain error when an invariant is broken.
  void validate() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Maps the cloud into [0,1]^3 with a single global scale so the largest
/// extent spans exactly [0,1]; shorter axes are centred and flat axes sit at 0.5.
PointCloud normalize_unit_cube(const PointCloud& pc);

/// True when every coordinate lies in [0,1].
bool is_unit_normalized(const PointCloud& pc);

/// Draws `n` points uniformly: without replacement when n <= N, with
/// replacement otherwise. Labels follow their points. Deterministic per seed.
PointCloud sample_points(const PointCloud& pc, std::size_t n, std::uint64_t seed);

/// The index sequence used by sample_points for the same arguments.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n,
                                        std::uint64_t seed);

PointCloud select_points(const PointCloud& pc, const std::vector<std::size_t>& indices);

}  // namespace pc2depth

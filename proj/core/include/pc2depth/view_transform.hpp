#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "pc2depth/point_cloud.hpp"

namespace pc2depth {

using Mat3 = std::array<double, 9>;  // row-major

/// A rigid view orientation. The rotation first spins the cloud by `azimuth`
/// about the vertical (y) axis, then tilts it by `elevation` about the x axis.
/// The grid's depth axis is z, so the viewer looks along +z after rotation.
class ViewTransform {
 public:
  ViewTransform() : ViewTransform(0.0, 0.0) {}
  ViewTransform(double azimuth_rad, double elevation_rad);

  double azimuth() const { return azimuth_; }
  double elevation() const { return elevation_; }
  const Mat3& rotation() const { return rotation_; }

  /// The transform undoing this one (rotation transposed).
  ViewTransform inverse() const;

 private:
  static ViewTransform from_matrix(const Mat3& r, double az, double el);

  double azimuth_ = 0.0;
  double elevation_ = 0.0;
  Mat3 rotation_{};
};

struct ViewSet {
  std::vector<ViewTransform> views;
  std::vector<double> weights;  // alpha_i, one per view

  std::size_t size() const { return views.size(); }
};

enum class ViewPreset { TenView, SixOrtho, Custom };

struct CustomView {
  double azimuth_rad = 0.0;
  double elevation_rad = 0.0;
  double weight = 1.0;
};

ViewPreset parse_view_preset(std::string_view name);

/// ten-view: the six axis views followed by four cube-diagonal corner views.
/// Preset weights are 1/M.
ViewSet make_view_set(ViewPreset preset, const std::vector<CustomView>& custom = {});

/// Reads [{"azimuth_deg": a, "elevation_deg": e, "weight": w}, ...].
std::vector<CustomView> load_custom_views(const std::filesystem::path& path);

/// Replaces the view weights; count must match and weights must be >= 0.
void set_view_weights(ViewSet& vs, std::vector<double> weights);

/// Rotates about the cube centre (0.5, 0.5, 0.5) without renormalising.
PointCloud rotate_about_center(const PointCloud& pc, const ViewTransform& v);

/// rotate_about_center followed by normalize_unit_cube.
PointCloud apply_view(const PointCloud& pc, const ViewTransform& v);

}  // namespace pc2depth

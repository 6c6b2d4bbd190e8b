#include "pc2depth/view_transform.hpp"

#include <cmath>
#include <numbers>

#include "binary_io.hpp"
#include "json.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

// Snaps entries that are within rounding of 0 or +-1 so axis-aligned
// views are exact permutations.
double snap(double v) {
  constexpr double eps = 1e-12;
  if (std::abs(v) < eps) return 0.0;
  if (std::abs(v - 1.0) < eps) return 1.0;
  if (std::abs(v + 1.0) < eps) return -1.0;
  return v;
}

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return r;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

ViewTransform::ViewTransform(double azimuth_rad, double elevation_rad)
    : azimuth_(azimuth_rad), elevation_(elevation_rad) {
  const double ca = std::cos(azimuth_rad), sa = std::sin(azimuth_rad);
  const double ce = std::cos(elevation_rad), se = std::sin(elevation_rad);
  const Mat3 yaw{ca, 0, sa, 0, 1, 0, -sa, 0, ca};
  const Mat3 tilt{1, 0, 0, 0, ce, -se, 0, se, ce};
  rotation_ = multiply(tilt, yaw);
  for (auto& v : rotation_) v = snap(v);
}

ViewTransform ViewTransform::from_matrix(const Mat3& r, double az, double el) {
  ViewTransform t;
  t.azimuth_ = az;
  t.elevation_ = el;
  t.rotation_ = r;
  return t;
}

ViewTransform ViewTransform::inverse() const {
  Mat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i * 3 + j] = rotation_[j * 3 + i];
  return from_matrix(t, -azimuth_, -elevation_);
}

ViewPreset parse_view_preset(std::string_view name) {
  if (name == "ten-view") return ViewPreset::TenView;
  if (name == "six-ortho") return ViewPreset::SixOrtho;
  if (name == "custom") return ViewPreset::Custom;
  fail(ErrorKind::Usage, "unknown view preset '" + std::string(name) + "'");
}

ViewSet make_view_set(ViewPreset preset, const std::vector<CustomView>& custom) {
  ViewSet vs;
  const double half_pi = std::numbers::pi / 2;
  auto add_ortho = [&] {
    // Looking along -z, +x, +z, -x (spinning about y), then from above and below.
    for (int q = 0; q < 4; ++q) vs.views.emplace_back(q * half_pi, 0.0);
    vs.views.emplace_back(0.0, half_pi);
    vs.views.emplace_back(0.0, -half_pi);
  };

  switch (preset) {
    case ViewPreset::SixOrtho:
      add_ortho();
      break;
    case ViewPreset::TenView: {
      add_ortho();
      const double corner_el = std::atan(1.0 / std::sqrt(2.0));  // 35.264 deg
      for (double az_deg : {45.0, 135.0, 225.0, 315.0}) {
        vs.views.emplace_back(deg2rad(az_deg), corner_el);
      }
      break;
    }
    case ViewPreset::Custom: {
      if (custom.empty()) fail(ErrorKind::Domain, "custom view set must not be empty");
      for (const auto& c : custom) {
        if (!std::isfinite(c.azimuth_rad) || !std::isfinite(c.elevation_rad)) {
          fail(ErrorKind::Domain, "custom view angles must be finite");
        }
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
          fail(ErrorKind::Domain, "view weight must be a non-negative finite number");
        }
        vs.views.emplace_back(c.azimuth_rad, c.elevation_rad);
        vs.weights.push_back(c.weight);
      }
      return vs;
    }
  }
  vs.weights.assign(vs.views.size(), 1.0 / static_cast<double>(vs.views.size()));
  return vs;
}

std::vector<CustomView> load_custom_views(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::Format, path.string() + ": expected a JSON list");
  std::vector<CustomView> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    if (!e.is_object() || !e.contains("azimuth_deg") || !e.contains("elevation_deg") ||
        !e["azimuth_deg"].is_number() || !e["elevation_deg"].is_number()) {
      fail(ErrorKind::Format,
           path.string() + ": entry " + std::to_string(i) + " needs numeric azimuth_deg/elevation_deg");
    }
    CustomView v;
    v.azimuth_rad = deg2rad(e["azimuth_deg"].get<double>());
    v.elevation_rad = deg2rad(e["elevation_deg"].get<double>());
    if (e.contains("weight")) {
      if (!e["weight"].is_number()) {
        fail(ErrorKind::Format, path.string() + ": entry " + std::to_string(i) + " weight");
      }
      v.weight = e["weight"].get<double>();
    }
    out.push_back(v);
  }
  return out;
}

void set_view_weights(ViewSet& vs, std::vector<double> weights) {
  if (weights.size() != vs.views.size()) {
    fail(ErrorKind::Domain, "expected " + std::to_string(vs.views.size()) +
                                " view weights, got " + std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorKind::Domain, "view weight must be a non-negative finite number");
    }
  }
  vs.weights = std::move(weights);
}

PointCloud rotate_about_center(const PointCloud& pc, const ViewTransform& v) {
  const auto& r = v.rotation();
  PointCloud out = pc;
  for (auto& p : out.points) {
    const double x = p.x - 0.5, y = p.y - 0.5, z = p.z - 0.5;
    p.x = static_cast<float>(r[0] * x + r[1] * y + r[2] * z + 0.5);
    p.y = static_cast<float>(r[3] * x + r[4] * y + r[5] * z + 0.5);
    p.z = static_cast<float>(r[6] * x + r[7] * y + r[8] * z + 0.5);
  }
  return out;
}

PointCloud apply_view(const PointCloud& pc, const ViewTransform& v) {
  if (pc.empty()) return pc;
  return normalize_unit_cube(rotate_about_center(pc, v));
}

}  // namespace pc2depth

#include "pc2depth/detection.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "json.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

using json = nlohmann::json;

void check_box(const DetectionBox& b, std::size_t index) {
  for (double s : b.size) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(ErrorKind::Domain, "box " + std::to_string(index) + " has a non-positive size");
    }
  }
  for (double c : b.center) {
    if (!std::isfinite(c)) fail(ErrorKind::Domain, "box " + std::to_string(index) + " centre is not finite");
  }
  if (!std::isfinite(b.yaw)) fail(ErrorKind::Domain, "box " + std::to_string(index) + " yaw is not finite");
}

std::array<double, 3> vec3(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j[field].is_array() || j[field].size() != 3) {
    fail(ErrorKind::Format, where + ": \"" + field + "\" must be a list of 3 numbers");
  }
  std::array<double, 3> out{};
  for (int a = 0; a < 3; ++a) {
    if (!j[field][a].is_number()) fail(ErrorKind::Format, where + ": \"" + field + "\" must be numeric");
    out[a] = j[field][a].get<double>();
  }
  return out;
}

}  // namespace

bool box_contains(const DetectionBox& box, const Point3f& p) {
  const double dx = p.x - box.center[0];
  const double dy = p.y - box.center[1];
  const double dz = p.z - box.center[2];
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  // World offset expressed in the box frame (inverse yaw).
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= box.size[0] / 2 && std::abs(ly) <= box.size[1] / 2 &&
         std::abs(dz) <= box.size[2] / 2;
}

PointCloud crop_box(const PointCloud& scene, const DetectionBox& box) {
  std::vector<std::size_t> inside;
  for (std::size_t n = 0; n < scene.size(); ++n) {
    if (box_contains(box, scene.points[n])) inside.push_back(n);
  }
  return select_points(scene, inside);
}

std::vector<DetectionBox> parse_boxes_json(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, source + ": " + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::Format, source + ": expected a JSON list of boxes");
  std::vector<DetectionBox> boxes;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    const std::string where = source + ": box " + std::to_string(i);
    if (!e.is_object()) fail(ErrorKind::Format, where + " is not an object");
    DetectionBox b;
    b.center = vec3(e, "center", where);
    b.size = vec3(e, "size", where);
    if (e.contains("yaw")) {
      if (!e["yaw"].is_number()) fail(ErrorKind::Format, where + ": \"yaw\" must be numeric");
      b.yaw = e["yaw"].get<double>();
    }
    check_box(b, i);
    boxes.push_back(b);
  }
  return boxes;
}

std::vector<DetectionBox> load_boxes(const std::filesystem::path& path) {
  return parse_boxes_json(detail::read_file_text(path), path.string());
}

std::string boxes_to_json(const std::vector<DetectionBox>& boxes) {
  json doc = json::array();
  for (const auto& b : boxes) {
    json e{{"center", b.center}, {"size", b.size}, {"yaw", b.yaw}, {"empty", b.empty}};
    if (b.label) {
      e["label"] = *b.label;
      e["score"] = b.score;
    } else {
      e["label"] = nullptr;
      e["score"] = nullptr;
    }
    doc.push_back(std::move(e));
  }
  return doc.dump(2) + "\n";
}

std::vector<DetectionBox> detect_zero_shot(const PointCloud& scene,
                                           const std::vector<DetectionBox>& boxes,
                                           const EmbeddingMatrix& class_weights,
                                           EmbeddingProvider& provider,
                                           const DetectionConfig& cfg) {
  if (cfg.pipeline.points == 0) fail(ErrorKind::Domain, "crop sample size must be >= 1");
  std::vector<DetectionBox> out;
  out.reserve(boxes.size());
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    check_box(boxes[b], b);
    DetectionBox result = boxes[b];
    result.label.reset();
    result.score = 0.0;
    result.empty = false;

    const PointCloud crop = crop_box(scene, boxes[b]);
    if (crop.empty()) {
      result.empty = true;
      out.push_back(result);
      continue;
    }
    PipelineConfig per_box = cfg.pipeline;
    per_box.seed = cfg.pipeline.seed + b;
    const auto cls = classify_point_cloud(crop, per_box, class_weights, provider, b);
    result.label = cls.predicted;
    result.score = cls.logits[cls.predicted];
    out.push_back(result);
  }
  return out;
}

}  // namespace pc2depth

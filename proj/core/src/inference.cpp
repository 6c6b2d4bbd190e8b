#include "pc2depth/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "binary_io.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

void softmax_into(std::span<const float> logits, std::vector<double>& out) {
  out.resize(logits.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (float x : logits) peak = std::max(peak, static_cast<double>(x));
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(static_cast<double>(logits[k]) - peak);
    total += out[k];
  }
  for (auto& x : out) x /= total;
}

}  // namespace

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

ClassificationResult zero_shot_classify(const std::vector<ViewFeature>& features,
                                        const EmbeddingMatrix& class_weights,
                                        std::span<const double> alpha) {
  if (features.empty()) fail(ErrorKind::Domain, "classification needs at least one view");
  if (features.size() != alpha.size()) {
    fail(ErrorKind::Domain, std::to_string(features.size()) + " view features but " +
                                std::to_string(alpha.size()) + " view weights");
  }
  const std::size_t k_classes = class_weights.rows();
  const std::size_t dim = class_weights.dim();
  ClassificationResult r;
  r.logits.assign(k_classes, 0.0);
  r.per_view_logits.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].dim() != dim) {
      fail(ErrorKind::Domain, "view " + std::to_string(i) + " feature has dim " +
                                  std::to_string(features[i].dim()) + ", class weights have " +
                                  std::to_string(dim));
    }
    std::vector<double> view(k_classes);
    for (std::size_t k = 0; k < k_classes; ++k) {
      const auto w = class_weights.row(k);
      double dot = 0.0;
      for (std::size_t c = 0; c < dim; ++c) dot += static_cast<double>(features[i].vector[c]) * w[c];
      view[k] = dot;
      r.logits[k] += alpha[i] * dot;
    }
    r.per_view_logits.push_back(std::move(view));
  }
  r.predicted = argmax_lowest(r.logits);
  return r;
}

PixelLogits segment_pixels(const DenseFeature& dense, const EmbeddingMatrix& part_weights) {
  if (dense.dim != part_weights.dim()) {
    fail(ErrorKind::Domain, "dense feature dim " + std::to_string(dense.dim) +
                                " does not match part weights dim " +
                                std::to_string(part_weights.dim()));
  }
  const std::size_t k_parts = part_weights.rows();
  PixelLogits out{dense.height, dense.width, k_parts, {}};
  const std::size_t pixels = static_cast<std::size_t>(dense.height) * dense.width;
  out.data.resize(pixels * k_parts);
  for (std::size_t px = 0; px < pixels; ++px) {
    const float* f = dense.data.data() + px * dense.dim;
    for (std::size_t k = 0; k < k_parts; ++k) {
      const auto w = part_weights.row(k);
      double dot = 0.0;
      for (std::size_t c = 0; c < dense.dim; ++c) dot += static_cast<double>(f[c]) * w[c];
      out.data[px * k_parts + k] = static_cast<float>(dot);
    }
  }
  return out;
}

SegmentationResult back_project(const std::vector<PixelLogits>& pixel_logits,
                                const std::vector<ProjectionRecord>& records,
                                std::size_t point_count, const BackProjectOptions& opts) {
  if (pixel_logits.size() != records.size()) {
    fail(ErrorKind::Domain, std::to_string(pixel_logits.size()) + " logit maps but " +
                                std::to_string(records.size()) + " projection records");
  }
  if (pixel_logits.empty()) fail(ErrorKind::Domain, "back-projection needs at least one view");
  const std::size_t k_parts = pixel_logits.front().classes;
  for (std::size_t v = 0; v < records.size(); ++v) {
    if (records[v].size() != point_count) {
      fail(ErrorKind::Domain, "record of view " + std::to_string(v) + " covers " +
                                  std::to_string(records[v].size()) + " points, expected " +
                                  std::to_string(point_count));
    }
    if (pixel_logits[v].classes != k_parts) {
      fail(ErrorKind::Domain, "logit maps disagree on the class count");
    }
    if (records[v].grid_height <= 0 || records[v].grid_width <= 0) {
      fail(ErrorKind::Domain, "record of view " + std::to_string(v) + " has no grid size");
    }
  }

  SegmentationResult r;
  r.points = point_count;
  r.classes = k_parts;
  r.logits.assign(point_count * k_parts, 0.0);
  r.labels.assign(point_count, 0);
  r.coverage.assign(point_count, 0);

  std::vector<double> probs;
  auto sample = [&](std::size_t v, std::size_t n) {
    const auto& rec = records[v];
    const auto& map = pixel_logits[v];
    const auto& e = rec.entries[n];
    const int pu = static_cast<int>(std::int64_t{e.u} * map.height / rec.grid_height);
    const int pv = static_cast<int>(std::int64_t{e.v} * map.width / rec.grid_width);
    return map.at(std::min(pu, map.height - 1), std::min(pv, map.width - 1));
  };
  auto accumulate = [&](std::span<const float> logits, double* dst) {
    if (opts.average_softmax) {
      softmax_into(logits, probs);
      for (std::size_t k = 0; k < k_parts; ++k) dst[k] += probs[k];
    } else {
      for (std::size_t k = 0; k < k_parts; ++k) dst[k] += logits[k];
    }
  };

  for (std::size_t n = 0; n < point_count; ++n) {
    double* row = r.logits.data() + n * k_parts;
    std::uint32_t hits = 0;
    for (std::size_t v = 0; v < records.size(); ++v) {
      if (!records[v].entries[n].visible) continue;
      accumulate(sample(v, n), row);
      ++hits;
    }
    r.coverage[n] = hits;
    if (hits == 0) {
      if (opts.fallback == BackProjectFallback::AllViews) {
        for (std::size_t v = 0; v < records.size(); ++v) accumulate(sample(v, n), row);
        hits = static_cast<std::uint32_t>(records.size());
      } else {
        const double prior = opts.average_softmax ? 1.0 / static_cast<double>(k_parts) : 0.0;
        std::fill(row, row + k_parts, prior);
        hits = 1;
      }
    }
    for (std::size_t k = 0; k < k_parts; ++k) row[k] /= hits;
    r.labels[n] = static_cast<std::int32_t>(argmax_lowest(r.row(n)));
  }
  return r;
}

ClassificationResult classify_point_cloud(const PointCloud& pc, const PipelineConfig& cfg,
                                          const EmbeddingMatrix& class_weights,
                                          EmbeddingProvider& provider,
                                          std::optional<std::size_t> item) {
  if (cfg.views.size() == 0) fail(ErrorKind::Domain, "classification needs at least one view");
  PointCloud input = normalize_unit_cube(pc);
  if (cfg.points > 0) input = sample_points(input, cfg.points, cfg.seed);
  const auto proj = project_views(input, cfg.views, cfg.grid, ProjectOptions{cfg.threads, true});
  const auto features = encode_depth_maps(proj.maps, provider, item);
  return zero_shot_classify(features, class_weights, cfg.views.weights);
}

SegmentationResult segment_point_cloud(const PointCloud& pc, const ViewSet& views,
                                       const GridConfig& grid,
                                       const EmbeddingMatrix& part_weights,
                                       EmbeddingProvider& provider,
                                       const BackProjectOptions& opts, unsigned threads) {
  if (pc.empty()) fail(ErrorKind::Domain, "segmentation needs at least one point");
  if (views.size() == 0) fail(ErrorKind::Domain, "segmentation needs at least one view");
  const auto input = normalize_unit_cube(pc);
  const auto proj = project_views(input, views, grid, ProjectOptions{threads, true});
  const auto dense = encode_dense(proj.maps, provider, true);
  std::vector<PixelLogits> logits;
  logits.reserve(dense.size());
  for (const auto& f : dense) logits.push_back(segment_pixels(f, part_weights));
  return back_project(logits, proj.records, input.size(), opts);
}

double instance_iou(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth,
                    std::span<const std::int32_t> parts) {
  if (predicted.size() != truth.size()) {
    fail(ErrorKind::Domain, "prediction and truth label counts differ");
  }
  if (parts.empty()) fail(ErrorKind::Domain, "part set must not be empty");
  const std::set<std::int32_t> known(parts.begin(), parts.end());
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (!known.count(truth[n])) {
      fail(ErrorKind::Domain, "unknown part id " + std::to_string(truth[n]) + " in ground truth");
    }
    if (!known.count(predicted[n])) {
      fail(ErrorKind::Domain, "unknown part id " + std::to_string(predicted[n]) + " in prediction");
    }
  }
  double total = 0.0;
  for (std::int32_t p : known) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t n = 0; n < truth.size(); ++n) {
      const bool a = predicted[n] == p, b = truth[n] == p;
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
    }
    total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return total / static_cast<double>(known.size());
}

double compute_miou(const std::vector<InstanceLabels>& instances,
                    const std::map<std::size_t, std::vector<std::int32_t>>& parts_per_class) {
  if (instances.empty()) fail(ErrorKind::Domain, "mIoU needs at least one instance");
  double total = 0.0;
  for (const auto& inst : instances) {
    const auto it = parts_per_class.find(inst.category);
    if (it == parts_per_class.end()) {
      fail(ErrorKind::Domain, "no part set for category " + std::to_string(inst.category));
    }
    total += instance_iou(inst.predicted, inst.truth, it->second);
  }
  return total / static_cast<double>(instances.size());
}

std::vector<std::uint8_t> encode_segl(const SegmentationResult& r) {
  detail::ByteWriter w;
  w.magic("SEGL");
  w.u32(static_cast<std::uint32_t>(r.points));
  w.u32(static_cast<std::uint32_t>(r.classes));
  for (double x : r.logits) w.f32(static_cast<float>(x));
  return w.bytes();
}

SegmentationResult decode_segl(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader in(bytes, source);
  in.expect_magic("SEGL");
  SegmentationResult r;
  r.points = in.u32();
  r.classes = in.u32();
  if (r.classes == 0) in.fail_at("class count must be positive");
  if (in.remaining() != r.points * r.classes * 4) in.fail_at("payload size does not match shape");
  r.logits.resize(r.points * r.classes);
  for (auto& x : r.logits) x = in.f32();
  r.labels.resize(r.points);
  r.coverage.assign(r.points, 0);
  for (std::size_t n = 0; n < r.points; ++n) {
    r.labels[n] = static_cast<std::int32_t>(argmax_lowest(r.row(n)));
  }
  return r;
}

void save_segl(const SegmentationResult& r, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_segl(r));
}

}  // namespace pc2depth

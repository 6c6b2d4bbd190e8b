#include "pc2depth/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

using Clock = std::chrono::steady_clock;

struct ScopedStage {
  std::chrono::nanoseconds* slot;
  Clock::time_point start = Clock::now();
  ~ScopedStage() {
    if (slot) *slot += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  }
};

std::chrono::nanoseconds* slot_of(StageTimes* t, std::chrono::nanoseconds StageTimes::*m) {
  return t ? &(t->*m) : nullptr;
}

// Ceil-index a coordinate in [0,1] onto 1-based cells [1, limit].
int ceil_index(double scaled, int limit) {
  const int idx = static_cast<int>(std::ceil(scaled));
  return std::clamp(idx, 1, limit);
}

std::vector<double> gaussian_taps(int size, double sigma) {
  const int r = size / 2;
  std::vector<double> taps(static_cast<std::size_t>(size));
  double total = 0.0;
  for (int d = -r; d <= r; ++d) {
    const double w = std::exp(-(d * d) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(d + r)] = w;
    total += w;
  }
  for (auto& w : taps) w /= total;
  return taps;
}

struct AxisWalk {
  int extent;
  std::size_t stride;
};

// Strides in (i, j, k) order for a grid stored with k innermost.
std::array<AxisWalk, 3> axes_of(const VoxelGrid& g) {
  return {AxisWalk{g.height(), static_cast<std::size_t>(g.width()) * g.depth()},
          AxisWalk{g.width(), static_cast<std::size_t>(g.depth())},
          AxisWalk{g.depth(), 1}};
}

// Calls fn(base, stride, extent) once for every 1-D line of the grid along
// axis `a`; cells of a line sit at base + t * stride.
template <typename Fn>
void for_each_line(const VoxelGrid& g, int a, Fn&& fn) {
  const auto axes = axes_of(g);
  const auto [extent, stride] = axes[a];
  const std::size_t span = static_cast<std::size_t>(extent) * stride;
  const std::size_t total = g.cell_count();
  for (std::size_t outer = 0; outer < total; outer += span) {
    for (std::size_t inner = 0; inner < stride; ++inner) fn(outer + inner, stride, extent);
  }
}

}  // namespace

Sigma3 GridConfig::resolved_sigma() const {
  if (gauss_sigma) return *gauss_sigma;
  Sigma3 s{};
  for (int a = 0; a < 3; ++a) s[a] = std::max(gauss_size[a], 1) / 4.0;
  return s;
}

double GridConfig::resolved_visibility_epsilon() const {
  return visibility_epsilon.value_or(1.5 / depth);
}

void GridConfig::validate() const {
  if (height <= 0 || width <= 0 || depth <= 0) {
    fail(ErrorKind::Domain, "grid dimensions must be positive");
  }
  if (height > 65535 || width > 65535) {
    fail(ErrorKind::Domain, "grid height/width must fit the u16 record indices");
  }
  if (!(scale > 0.0 && scale <= 1.0)) fail(ErrorKind::Domain, "scale must lie in (0,1]");
  for (int a = 0; a < 3; ++a) {
    if (pool_window[a] < 1) fail(ErrorKind::Domain, "pool window entries must be >= 1");
    if (gauss_size[a] < 1 || gauss_size[a] % 2 == 0) {
      fail(ErrorKind::Domain, "gaussian kernel sizes must be odd and >= 1");
    }
  }
  for (double s : resolved_sigma()) {
    if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::Domain, "gaussian sigma must be positive");
  }
  if (out_height <= 0 || out_width <= 0) fail(ErrorKind::Domain, "output size must be positive");
  if (!(resolved_visibility_epsilon() >= 0.0)) {
    fail(ErrorKind::Domain, "visibility epsilon must be non-negative");
  }
}

VoxelGrid::VoxelGrid(int height, int width, int depth) : h_(height), w_(width), d_(depth) {
  if (height < 0 || width < 0 || depth < 0) fail(ErrorKind::Domain, "negative grid size");
  const std::size_t n = static_cast<std::size_t>(height) * width * depth;
  values_.assign(n, kEmpty);
  occupied_.assign(n, 0);
}

void VoxelGrid::set(int i, int j, int k, float v) {
  const auto idx = index(i, j, k);
  values_[idx] = v;
  occupied_[idx] = 1;
}

void VoxelGrid::clear(int i, int j, int k) {
  const auto idx = index(i, j, k);
  values_[idx] = kEmpty;
  occupied_[idx] = 0;
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied_.begin(), occupied_.end(), 1));
}

std::size_t DepthMap::foreground_count() const {
  return static_cast<std::size_t>(std::count(background.begin(), background.end(), 0));
}

StageTimes& StageTimes::operator+=(const StageTimes& o) {
  quantize += o.quantize;
  densify += o.densify;
  smooth += o.smooth;
  squeeze += o.squeeze;
  upsample += o.upsample;
  return *this;
}

QuantizeResult quantize(const PointCloud& pc, const GridConfig& cfg) {
  cfg.validate();
  QuantizeResult out{VoxelGrid(cfg.height, cfg.width, cfg.depth),
                     ProjectionRecord{cfg.height, cfg.width, {}}};
  out.record.entries.reserve(pc.size());

  const double s = cfg.scale;
  const int lim_i = static_cast<int>(std::ceil(s * cfg.height));
  const int lim_j = static_cast<int>(std::ceil(s * cfg.width));
  const int off_i = static_cast<int>(std::floor((1.0 - s) * cfg.height / 2.0));
  const int off_j = static_cast<int>(std::floor((1.0 - s) * cfg.width / 2.0));

  for (std::size_t n = 0; n < pc.size(); ++n) {
    const auto& p = pc.points[n];
    if (!(p.x >= 0.f && p.x <= 1.f && p.y >= 0.f && p.y <= 1.f && p.z >= 0.f && p.z <= 1.f)) {
      fail(ErrorKind::Domain,
           "point " + std::to_string(n) + " lies outside the unit cube; normalize first");
    }
    const int i = ceil_index(s * cfg.height * p.x, lim_i) + off_i - 1;
    const int j = ceil_index(s * cfg.width * p.y, lim_j) + off_j - 1;
    const int k = ceil_index(static_cast<double>(cfg.depth) * p.z, cfg.depth) - 1;

    auto& g = out.grid;
    if (!g.occupied(i, j, k) || p.z < g.value(i, j, k)) g.set(i, j, k, p.z);
    out.record.entries.push_back(
        RecordEntry{static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j), p.z, false});
  }
  return out;
}

VoxelGrid densify(const VoxelGrid& g, const Extent3& window) {
  for (int w : window) {
    if (w < 1) fail(ErrorKind::Domain, "pool window entries must be >= 1");
  }
  // A box minimum factors into three 1-D minima. Empty cells hold +inf, so
  // the running minimum stays +inf exactly when a window has no occupied cell.
  std::vector<float> cur = g.values_;
  std::vector<float> next(cur.size());
  for (int a = 0; a < 3; ++a) {
    const int w = window[a];
    if (w == 1) continue;
    const int lo = -(w / 2);
    const int hi = (w + 1) / 2 - 1;
    for_each_line(g, a, [&](std::size_t base, std::size_t stride, int extent) {
      for (int c = 0; c < extent; ++c) {
        const int from = std::max(c + lo, 0);
        const int to = std::min(c + hi, extent - 1);
        float m = VoxelGrid::kEmpty;
        for (int t = from; t <= to; ++t) m = std::min(m, cur[base + static_cast<std::size_t>(t) * stride]);
        next[base + static_cast<std::size_t>(c) * stride] = m;
      }
    });
    cur.swap(next);
  }

  VoxelGrid out(g.height(), g.width(), g.depth());
  out.values_ = std::move(cur);
  for (std::size_t idx = 0; idx < out.values_.size(); ++idx) {
    out.occupied_[idx] = out.values_[idx] != VoxelGrid::kEmpty ? 1 : 0;
  }
  return out;
}

VoxelGrid smooth(const VoxelGrid& g, const Extent3& size, const Sigma3& sigma) {
  for (int a = 0; a < 3; ++a) {
    if (size[a] < 1 || size[a] % 2 == 0) {
      fail(ErrorKind::Domain, "gaussian kernel sizes must be odd and >= 1");
    }
    if (!(sigma[a] > 0.0)) fail(ErrorKind::Domain, "gaussian sigma must be positive");
  }
  if (size == Extent3{1, 1, 1}) return g;

  // Normalised convolution: convolve mask*value and mask separately with the
  // separable kernel, then divide at occupied cells.
  const std::size_t n = g.cell_count();
  std::vector<double> num(n), den(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (g.occupied_[idx]) {
      num[idx] = g.values_[idx];
      den[idx] = 1.0;
    }
  }
  std::vector<double> num2(n), den2(n);
  for (int a = 0; a < 3; ++a) {
    if (size[a] == 1) continue;
    const auto taps = gaussian_taps(size[a], sigma[a]);
    const int r = size[a] / 2;
    for_each_line(g, a, [&](std::size_t base, std::size_t stride, int extent) {
      for (int c = 0; c < extent; ++c) {
        const int from = std::max(c - r, 0);
        const int to = std::min(c + r, extent - 1);
        double sn = 0.0, sd = 0.0;
        for (int t = from; t <= to; ++t) {
          const double w = taps[static_cast<std::size_t>(t - c + r)];
          const std::size_t src = base + static_cast<std::size_t>(t) * stride;
          sn += w * num[src];
          sd += w * den[src];
        }
        const std::size_t dst = base + static_cast<std::size_t>(c) * stride;
        num2[dst] = sn;
        den2[dst] = sd;
      }
    });
    num.swap(num2);
    den.swap(den2);
  }

  VoxelGrid out(g.height(), g.width(), g.depth());
  out.occupied_ = g.occupied_;
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (g.occupied_[idx]) out.values_[idx] = static_cast<float>(num[idx] / den[idx]);
  }
  return out;
}

DepthMap squeeze_native(const VoxelGrid& g) {
  DepthMap m;
  m.height = g.height();
  m.width = g.width();
  const std::size_t pixels = static_cast<std::size_t>(m.height) * m.width;
  m.depth.assign(pixels, 1.f);
  m.intensity.assign(pixels, 0.f);
  m.background.assign(pixels, 1);
  const auto& values = g.values();
  const auto& occ = g.occupancy();
  const std::size_t d = static_cast<std::size_t>(g.depth());
  for (std::size_t px = 0; px < pixels; ++px) {
    float best = VoxelGrid::kEmpty;
    bool any = false;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t idx = px * d + k;
      if (occ[idx] && (!any || values[idx] < best)) {
        best = values[idx];
        any = true;
      }
    }
    if (any) {
      m.depth[px] = best;
      m.intensity[px] = 1.f - best;
      m.background[px] = 0;
    }
  }
  return m;
}

DepthMap upsample(const DepthMap& src, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) fail(ErrorKind::Domain, "output size must be positive");
  if (src.height == out_height && src.width == out_width) return src;
  if (src.height <= 0 || src.width <= 0) fail(ErrorKind::Domain, "cannot resize an empty map");

  DepthMap m;
  m.height = out_height;
  m.width = out_width;
  const std::size_t pixels = static_cast<std::size_t>(out_height) * out_width;
  m.depth.resize(pixels);
  m.intensity.resize(pixels);
  m.background.resize(pixels);

  const double sy = static_cast<double>(src.height) / out_height;
  const double sx = static_cast<double>(src.width) / out_width;
  for (int u = 0; u < out_height; ++u) {
    const double fy = std::clamp((u + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    const int ny = std::min(static_cast<int>((u + 0.5) * sy), src.height - 1);
    for (int v = 0; v < out_width; ++v) {
      const double fx = std::clamp((v + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      const int nx = std::min(static_cast<int>((v + 0.5) * sx), src.width - 1);

      const std::size_t o = m.index(u, v);
      const bool bg = src.background[src.index(ny, nx)] != 0;
      m.background[o] = bg ? 1 : 0;
      if (bg) {
        m.depth[o] = 1.f;
        m.intensity[o] = 0.f;
        continue;
      }
      const double top = (1 - tx) * src.depth[src.index(y0, x0)] + tx * src.depth[src.index(y0, x1)];
      const double bot = (1 - tx) * src.depth[src.index(y1, x0)] + tx * src.depth[src.index(y1, x1)];
      const float d = static_cast<float>((1 - ty) * top + ty * bot);
      m.depth[o] = d;
      m.intensity[o] = 1.f - d;
    }
  }
  return m;
}

DepthMap squeeze(const VoxelGrid& g, int out_height, int out_width) {
  return upsample(squeeze_native(g), out_height, out_width);
}

void mark_visibility(ProjectionRecord& record, const DepthMap& native, double epsilon) {
  if (native.height != record.grid_height || native.width != record.grid_width) {
    fail(ErrorKind::Domain, "record and depth map resolutions differ");
  }
  for (auto& e : record.entries) {
    const std::size_t px = native.index(e.u, e.v);
    e.visible = !native.background[px] &&
                std::abs(static_cast<double>(e.z) - native.depth[px]) <= epsilon;
  }
}

ViewProjection project_view(const PointCloud& pc, const ViewTransform& view,
                            const GridConfig& cfg, bool do_upsample, StageTimes* times) {
  cfg.validate();
  const PointCloud oriented = apply_view(pc, view);

  QuantizeResult q;
  {
    ScopedStage t{slot_of(times, &StageTimes::quantize)};
    q = quantize(oriented, cfg);
  }
  VoxelGrid grid;
  {
    ScopedStage t{slot_of(times, &StageTimes::densify)};
    grid = densify(q.grid, cfg.pool_window);
  }
  {
    ScopedStage t{slot_of(times, &StageTimes::smooth)};
    grid = smooth(grid, cfg.gauss_size, cfg.resolved_sigma());
  }
  ViewProjection out;
  {
    ScopedStage t{slot_of(times, &StageTimes::squeeze)};
    out.native = squeeze_native(grid);
  }
  {
    ScopedStage t{slot_of(times, &StageTimes::upsample)};
    out.map = do_upsample ? upsample(out.native, cfg.out_height, cfg.out_width) : out.native;
  }
  out.record = std::move(q.record);
  mark_visibility(out.record, out.native, cfg.resolved_visibility_epsilon());
  return out;
}

MultiViewProjection project_views(const PointCloud& pc, const ViewSet& vs,
                                  const GridConfig& cfg, const ProjectOptions& opts,
                                  std::vector<StageTimes>* per_view_times) {
  cfg.validate();
  const std::size_t m = vs.size();
  std::vector<ViewProjection> results(m);
  if (per_view_times) per_view_times->assign(m, StageTimes{});

  auto run = [&](std::size_t v) {
    results[v] = project_view(pc, vs.views[v], cfg, opts.upsample,
                              per_view_times ? &(*per_view_times)[v] : nullptr);
  };

  const std::size_t workers = std::min<std::size_t>(std::max(opts.threads, 1u), m);
  if (workers <= 1) {
    for (std::size_t v = 0; v < m; ++v) run(v);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t v = w; v < m; v += workers) run(v);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  MultiViewProjection out;
  out.maps.reserve(m);
  out.records.reserve(m);
  out.native_maps.reserve(m);
  for (auto& r : results) {
    out.maps.push_back(std::move(r.map));
    out.records.push_back(std::move(r.record));
    out.native_maps.push_back(std::move(r.native));
  }
  return out;
}

}  // namespace pc2depth

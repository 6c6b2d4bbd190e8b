#include "pc2depth/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "pc2depth/error.hpp"

namespace pc2depth {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      fail(ErrorKind::Domain, "non-finite coordinate at point " + std::to_string(i));
    }
  }
  if (labels) {
    if (labels->size() != points.size()) {
      fail(ErrorKind::Domain, "label count " + std::to_string(labels->size()) +
                                  " does not match point count " +
                                  std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < labels->size(); ++i) {
      if ((*labels)[i] < 0) {
        fail(ErrorKind::Domain, "negative label at point " + std::to_string(i));
      }
    }
  }
}

PointCloud normalize_unit_cube(const PointCloud& pc) {
  if (pc.empty()) fail(ErrorKind::Domain, "cannot normalize an empty point cloud");

  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& p : pc.points) {
    const std::array<double, 3> c{p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  std::array<double, 3> extent{};
  for (int a = 0; a < 3; ++a) extent[a] = hi[a] - lo[a];
  const double largest = *std::max_element(extent.begin(), extent.end());

  PointCloud out = pc;
  for (auto& p : out.points) {
    std::array<float*, 3> c{&p.x, &p.y, &p.z};
    for (int a = 0; a < 3; ++a) {
      double v = 0.5;
      if (largest > 0.0 && extent[a] > 0.0) {
        v = (static_cast<double>(*c[a]) - lo[a]) / largest +
            0.5 * (1.0 - extent[a] / largest);
      }
      *c[a] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

bool is_unit_normalized(const PointCloud& pc) {
  return std::all_of(pc.points.begin(), pc.points.end(), [](const Point3f& p) {
    return p.x >= 0.f && p.x <= 1.f && p.y >= 0.f && p.y <= 1.f && p.z >= 0.f &&
           p.z <= 1.f;
  });
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n,
                                        std::uint64_t seed) {
  if (population == 0) fail(ErrorKind::Domain, "cannot sample from an empty cloud");
  if (n == 0) fail(ErrorKind::Domain, "sample size must be at least 1");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx;
  if (n <= population) {
    // Partial Fisher-Yates: the first n slots are a uniform n-subset.
    idx.resize(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, population - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
  } else {
    idx.reserve(n);
    std::uniform_int_distribution<std::size_t> pick(0, population - 1);
    for (std::size_t i = 0; i < n; ++i) idx.push_back(pick(rng));
  }
  return idx;
}

PointCloud select_points(const PointCloud& pc, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.points.reserve(indices.size());
  if (pc.labels) out.labels.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(pc.points.at(i));
    if (pc.labels) out.labels->push_back((*pc.labels)[i]);
  }
  return out;
}

PointCloud sample_points(const PointCloud& pc, std::size_t n, std::uint64_t seed) {
  return select_points(pc, sample_indices(pc.size(), n, seed));
}

}  // namespace pc2depth

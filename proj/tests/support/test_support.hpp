#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pc2depth/embedding.hpp"
#include "pc2depth/llm_client.hpp"
#include "pc2depth/point_cloud.hpp"
#include "pc2depth/projection.hpp"
#include "pc2depth/providers.hpp"

namespace pc2depth::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Uniform points inside the unit cube.
PointCloud random_unit_cloud(std::size_t n, std::mt19937_64& rng);

// Random points in an arbitrary box, not normalised.
PointCloud random_cloud(std::size_t n, std::mt19937_64& rng, double lo = -3.0, double hi = 5.0);

// Brute-force reference implementations of the projection stages. They avoid
// the separable shortcuts of the library and walk the definitions directly.
namespace oracle {

struct Cell {
  int i, j, k;
};

Cell quantize_point(const Point3f& p, const GridConfig& cfg);
VoxelGrid quantize(const PointCloud& pc, const GridConfig& cfg);
VoxelGrid densify(const VoxelGrid& g, const Extent3& window);
// Smoothed values, +inf where unoccupied.
std::vector<double> smooth(const VoxelGrid& g, const Extent3& size, const Sigma3& sigma);
DepthMap squeeze_native(const VoxelGrid& g);
double bilinear_depth(const DepthMap& src, int out_h, int out_w, int u, int v);

}  // namespace oracle

// Emits fixed per-view vectors; records every key it was asked for.
class ScriptedProvider : public EmbeddingProvider {
 public:
  using GlobalFn = std::function<std::vector<float>(const DepthMap&, const ViewKey&)>;
  using DenseFn = std::function<DenseFeature(const DepthMap&, const ViewKey&)>;
  using TextFn = std::function<std::vector<float>(const std::string&)>;

  explicit ScriptedProvider(GlobalFn global, DenseFn dense = nullptr, TextFn text = nullptr)
      : global_(std::move(global)), dense_(std::move(dense)), text_(std::move(text)) {}

  std::vector<float> embed_view(const DepthMap& map, const ViewKey& key) override;
  DenseFeature embed_view_dense(const DepthMap& map, const ViewKey& key) override;
  std::vector<float> embed_text(const std::string& text) override;
  bool supports_dense() const override { return static_cast<bool>(dense_); }

  std::vector<ViewKey> keys() const;

 private:
  GlobalFn global_;
  DenseFn dense_;
  TextFn text_;
  mutable std::mutex mu_;
  std::vector<ViewKey> keys_;
};

// Returns `n` deterministic strings per call derived from the command.
class CountingLlm : public LlmEndpoint {
 public:
  std::vector<std::string> complete(const LlmRequest& request) override;

  std::atomic<int> calls{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak_in_flight{0};
  std::chrono::milliseconds delay{0};
  // Requests whose command contains this substring throw a transport error.
  std::string fail_on;
};

std::vector<float> one_hot(std::size_t dim, std::size_t k);

}  // namespace pc2depth::test

#include <benchmark/benchmark.h>

#include "pc2depth/bench.hpp"
#include "pc2depth/inference.hpp"
#include "pc2depth/projection.hpp"

using namespace pc2depth;

namespace {

PointCloud oriented_cloud(std::size_t n) {
  return apply_view(normalize_unit_cube(make_benchmark_cloud(n, 7)), ViewTransform(0.6, 0.3));
}

// Cheap stand-in encoder so classification timing is dominated by projection.
class ConstantProvider final : public EmbeddingProvider {
 public:
  std::vector<float> embed_view(const DepthMap& map, const ViewKey& key) override {
    std::vector<float> v(16, 0.01f);
    v[key.view % 16] += static_cast<float>(map.foreground_count()) * 1e-4f;
    return v;
  }
};

void BM_Quantize(benchmark::State& state) {
  const auto pc = oriented_cloud(static_cast<std::size_t>(state.range(0)));
  const GridConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(quantize(pc, cfg));
}
BENCHMARK(BM_Quantize)->Arg(1024)->Arg(8192);

void BM_Densify(benchmark::State& state) {
  const GridConfig cfg;
  const auto g = quantize(oriented_cloud(1024), cfg).grid;
  for (auto _ : state) benchmark::DoNotOptimize(densify(g, cfg.pool_window));
}
BENCHMARK(BM_Densify);

void BM_Smooth(benchmark::State& state) {
  const GridConfig cfg;
  const auto g = densify(quantize(oriented_cloud(1024), cfg).grid, cfg.pool_window);
  for (auto _ : state) benchmark::DoNotOptimize(smooth(g, cfg.gauss_size, cfg.resolved_sigma()));
}
BENCHMARK(BM_Smooth);

void BM_Squeeze(benchmark::State& state) {
  const GridConfig cfg;
  const auto g = densify(quantize(oriented_cloud(1024), cfg).grid, cfg.pool_window);
  for (auto _ : state) benchmark::DoNotOptimize(squeeze(g, cfg.out_height, cfg.out_width));
}
BENCHMARK(BM_Squeeze);

void BM_ProjectTenViews(benchmark::State& state) {
  const auto pc = normalize_unit_cube(make_benchmark_cloud(1024, 7));
  const auto vs = make_view_set(ViewPreset::TenView);
  const GridConfig cfg;
  const ProjectOptions opts{static_cast<unsigned>(state.range(0)), true};
  for (auto _ : state) benchmark::DoNotOptimize(project_views(pc, vs, cfg, opts));
}
BENCHMARK(BM_ProjectTenViews)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ClassifyPointCloud(benchmark::State& state) {
  const auto pc = make_benchmark_cloud(4096, 7);
  std::vector<float> w(10 * 16, 0.f);
  for (std::size_t k = 0; k < 10; ++k) w[k * 16 + k] = 1.f;
  const auto weights = EmbeddingMatrix::from_rows(10, 16, w);
  ConstantProvider provider;
  const PipelineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(classify_point_cloud(pc, cfg, weights, provider));
}
BENCHMARK(BM_ClassifyPointCloud)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

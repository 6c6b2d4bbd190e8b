#include <gtest/gtest.h>

#include <cmath>

#include "pc2depth/error.hpp"
#include "pc2depth/projection.hpp"
#include "test_support.hpp"

using namespace pc2depth;
namespace oracle = pc2depth::test::oracle;

namespace {

GridConfig small_grid(int h, int w, int d, double s = 1.0) {
  GridConfig c;
  c.height = h;
  c.width = w;
  c.depth = d;
  c.scale = s;
  return c;
}

VoxelGrid random_grid(int h, int w, int d, double fill, std::mt19937_64& rng) {
  VoxelGrid g(h, w, d);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int k = 0; k < d; ++k)
        if (u(rng) < fill) g.set(i, j, k, u(rng));
  return g;
}

void expect_grids_equal(const VoxelGrid& a, const VoxelGrid& b) {
  ASSERT_EQ(a.cell_count(), b.cell_count());
  EXPECT_EQ(a.occupancy(), b.occupancy());
  for (std::size_t i = 0; i < a.cell_count(); ++i) {
    if (a.occupancy()[i]) EXPECT_EQ(a.values()[i], b.values()[i]) << "cell " << i;
  }
}

}  // namespace

TEST(GridConfig, DefaultsAndValidation) {
  GridConfig c;
  EXPECT_EQ(c.height, 112);
  EXPECT_EQ(c.width, 112);
  EXPECT_EQ(c.depth, 8);
  EXPECT_EQ(c.scale, 0.7);
  EXPECT_EQ(c.pool_window, (Extent3{6, 6, 2}));
  EXPECT_EQ(c.gauss_size, (Extent3{3, 3, 1}));
  EXPECT_EQ(c.out_height, 224);
  EXPECT_EQ(c.out_width, 224);
  EXPECT_DOUBLE_EQ(c.resolved_visibility_epsilon(), 1.5 / 8);
  EXPECT_EQ(c.resolved_sigma(), (Sigma3{0.75, 0.75, 0.25}));
  c.gauss_size = {2, 3, 1};
  EXPECT_THROW(c.validate(), Error);
  c = GridConfig{};
  c.scale = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Quantize, KeepsMinimumDepthPerVoxel) {
  const auto cfg = small_grid(4, 4, 1);
  PointCloud pc;
  pc.points = {{0.5f, 0.5f, 0.75f}, {0.5f, 0.5f, 0.25f}};
  const auto q = quantize(pc, cfg);
  EXPECT_EQ(q.grid.occupied_count(), 1u);
  EXPECT_EQ(q.grid.value(1, 1, 0), 0.25f);
  ASSERT_EQ(q.record.size(), 2u);
  EXPECT_EQ(q.record.entries[0].u, q.record.entries[1].u);
}

TEST(Quantize, EmptyCloud) {
  const auto q = quantize(PointCloud{}, small_grid(5, 5, 3));
  EXPECT_EQ(q.grid.occupied_count(), 0u);
  EXPECT_EQ(q.record.size(), 0u);
}

TEST(Quantize, RejectsUnnormalizedInput) {
  PointCloud pc;
  pc.points = {{0.5f, 1.5f, 0.5f}};
  try {
    quantize(pc, small_grid(4, 4, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(Quantize, CentringOffsetsWithScale) {
  // s = 0.5 on 10 cells: shape occupies 5 cells starting at floor(2.5) = 2.
  const auto cfg = small_grid(10, 10, 2, 0.5);
  PointCloud pc;
  pc.points = {{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const auto q = quantize(pc, cfg);
  EXPECT_EQ(q.record.entries[0].u, 2);
  EXPECT_EQ(q.record.entries[1].u, 6);
  EXPECT_TRUE(q.grid.occupied(2, 2, 0));
  EXPECT_TRUE(q.grid.occupied(6, 6, 1));
}

TEST(Quantize, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pc = test::random_unit_cloud(50, rng);
    const auto cfg = small_grid(8, 8, 4);
    const auto q = quantize(pc, cfg);
    expect_grids_equal(q.grid, oracle::quantize(pc, cfg));
    for (std::size_t n = 0; n < pc.size(); ++n) {
      const auto c = oracle::quantize_point(pc.points[n], cfg);
      EXPECT_EQ(q.record.entries[n].u, c.i);
      EXPECT_EQ(q.record.entries[n].v, c.j);
      EXPECT_EQ(q.record.entries[n].z, pc.points[n].z);
    }
  }
}

TEST(Densify, UnitWindowIsIdentity) {
  std::mt19937_64 rng(1);
  const auto g = random_grid(6, 5, 3, 0.3, rng);
  expect_grids_equal(densify(g, {1, 1, 1}), g);
}

TEST(Densify, SingleSourceSpreadsOverItsNeighbourhood) {
  VoxelGrid g(7, 7, 2);
  g.set(3, 3, 1, 0.4f);
  const auto d = densify(g, {3, 3, 1});
  EXPECT_EQ(d.occupied_count(), 9u);
  for (int i = 2; i <= 4; ++i)
    for (int j = 2; j <= 4; ++j) EXPECT_EQ(d.value(i, j, 1), 0.4f);
  EXPECT_FALSE(d.occupied(3, 3, 0));
}

TEST(Densify, MatchesSlidingWindowOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_grid(10, 10, 4, 0.1, rng);
    expect_grids_equal(densify(g, {6, 6, 2}), oracle::densify(g, {6, 6, 2}));
    const Extent3 w{1 + int(rng() % 5), 1 + int(rng() % 5), 1 + int(rng() % 3)};
    expect_grids_equal(densify(g, w), oracle::densify(g, w));
  }
}

TEST(Smooth, UnitKernelIsIdentity) {
  std::mt19937_64 rng(3);
  const auto g = random_grid(5, 5, 3, 0.5, rng);
  expect_grids_equal(smooth(g, {1, 1, 1}, {1, 1, 1}), g);
}

TEST(Smooth, ConstantFieldStaysConstant) {
  VoxelGrid g(6, 6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 3; ++k) g.set(i, j, k, 0.375f);
  const auto s = smooth(g, {3, 3, 3}, {0.75, 0.75, 0.75});
  for (float v : s.values()) EXPECT_NEAR(v, 0.375f, 1e-7);
}

TEST(Smooth, SpikeMatchesClosedFormWeights) {
  VoxelGrid g(5, 5, 1);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) g.set(i, j, 0, 0.f);
  g.set(2, 2, 0, 1.f);
  const double sigma = 0.75;
  const double e1 = std::exp(-1.0 / (2 * sigma * sigma));
  const double t0 = 1.0 / (1.0 + 2.0 * e1), t1 = e1 / (1.0 + 2.0 * e1);
  const auto s = smooth(g, {3, 3, 1}, {sigma, sigma, 1.0});
  EXPECT_NEAR(s.value(2, 2, 0), t0 * t0, 1e-7);
  EXPECT_NEAR(s.value(1, 2, 0), t1 * t0, 1e-7);
  EXPECT_NEAR(s.value(1, 1, 0), t1 * t1, 1e-7);
  EXPECT_NEAR(s.value(0, 0, 0), 0.0, 1e-7);
}

TEST(Smooth, IgnoresEmptyNeighboursAndKeepsOccupancy) {
  VoxelGrid g(3, 3, 1);
  g.set(1, 1, 0, 0.5f);
  g.set(1, 2, 0, 0.9f);
  const auto s = smooth(g, {3, 3, 1}, {0.75, 0.75, 0.25});
  EXPECT_EQ(s.occupancy(), g.occupancy());
  EXPECT_GT(s.value(1, 1, 0), 0.5f);
  EXPECT_LT(s.value(1, 1, 0), 0.9f);
}

TEST(Smooth, MatchesFullKernelOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_grid(9, 8, 5, 0.4, rng);
    const Extent3 size{1 + 2 * int(rng() % 3), 1 + 2 * int(rng() % 3), 1 + 2 * int(rng() % 2)};
    const Sigma3 sigma{0.3 + (rng() % 100) / 50.0, 0.3 + (rng() % 100) / 50.0, 0.5};
    const auto s = smooth(g, size, sigma);
    const auto o = oracle::smooth(g, size, sigma);
    EXPECT_EQ(s.occupancy(), g.occupancy());
    for (std::size_t i = 0; i < o.size(); ++i) {
      if (g.occupancy()[i]) EXPECT_NEAR(s.values()[i], o[i], 1e-6);
    }
  }
}

TEST(Squeeze, EmptyGridIsBackground) {
  const auto m = squeeze(VoxelGrid(4, 4, 3), 8, 8);
  EXPECT_EQ(m.foreground_count(), 0u);
  for (float d : m.depth) EXPECT_EQ(d, 1.f);
  for (float v : m.intensity) EXPECT_EQ(v, 0.f);
}

TEST(Squeeze, ColumnMinimum) {
  VoxelGrid g(2, 2, 3);
  g.set(0, 1, 0, 0.6f);
  g.set(0, 1, 2, 0.3f);
  const auto m = squeeze_native(g);
  EXPECT_EQ(m.depth[m.index(0, 1)], 0.3f);
  EXPECT_FLOAT_EQ(m.intensity[m.index(0, 1)], 0.7f);
  EXPECT_EQ(m.background[m.index(0, 0)], 1);
}

TEST(Squeeze, MatchesColumnMinOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_grid(7, 9, 5, 0.2, rng);
    const auto a = squeeze_native(g);
    const auto b = oracle::squeeze_native(g);
    EXPECT_EQ(a.depth, b.depth);
    EXPECT_EQ(a.intensity, b.intensity);
    EXPECT_EQ(a.background, b.background);
    EXPECT_EQ(squeeze(g, 7, 9).depth, a.depth);
  }
}

TEST(Upsample, MatchesBilinearOracleOnForeground) {
  std::mt19937_64 rng(6);
  VoxelGrid g(6, 5, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) g.set(i, j, 0, float((rng() % 1000) / 1000.0));
  const auto native = squeeze_native(g);
  const auto up = upsample(native, 17, 13);
  for (int u = 0; u < 17; ++u) {
    for (int v = 0; v < 13; ++v) {
      EXPECT_NEAR(up.depth[up.index(u, v)], oracle::bilinear_depth(native, 17, 13, u, v), 1e-6);
      EXPECT_FLOAT_EQ(up.intensity[up.index(u, v)], 1.f - up.depth[up.index(u, v)]);
    }
  }
}

TEST(Upsample, BackgroundStaysBackground) {
  VoxelGrid g(4, 4, 1);
  g.set(1, 1, 0, 0.2f);
  const auto up = upsample(squeeze_native(g), 8, 8);
  EXPECT_EQ(up.foreground_count(), 4u);
  for (int u = 2; u < 4; ++u)
    for (int v = 2; v < 4; ++v) EXPECT_EQ(up.background[up.index(u, v)], 0);
  EXPECT_EQ(up.depth[up.index(0, 0)], 1.f);
}

TEST(ProjectViews, SinglePointIdentityView) {
  PointCloud pc;
  pc.points = {{0.5f, 0.5f, 0.5f}};
  const auto vs = make_view_set(ViewPreset::Custom, {{0, 0, 1}});
  const auto out = project_views(pc, vs, GridConfig{});
  ASSERT_EQ(out.maps.size(), 1u);
  EXPECT_GT(out.maps[0].foreground_count(), 0u);
  EXPECT_TRUE(out.records[0].entries[0].visible);
  EXPECT_EQ(out.maps[0].height, 224);
  EXPECT_EQ(out.native_maps[0].height, 112);
}

TEST(ProjectViews, OccludedPointIsHidden) {
  PointCloud pc;
  // The anchors pin normalisation so the pair keeps its z values.
  pc.points = {{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}, {0.5f, 0.5f, 0.2f}, {0.5f, 0.5f, 0.9f}};
  const auto vs = make_view_set(ViewPreset::Custom, {{0, 0, 1}});
  const auto out = project_views(pc, vs, GridConfig{});
  EXPECT_TRUE(out.records[0].entries[2].visible);
  EXPECT_FALSE(out.records[0].entries[3].visible);
}

TEST(ProjectViews, ArityAndThreadIndependence) {
  std::mt19937_64 rng(7);
  const auto pc = normalize_unit_cube(test::random_cloud(300, rng));
  const auto vs = make_view_set(ViewPreset::TenView);
  std::vector<StageTimes> times;
  const auto a = project_views(pc, vs, GridConfig{}, {1, true}, &times);
  const auto b = project_views(pc, vs, GridConfig{}, {4, true});
  ASSERT_EQ(a.maps.size(), 10u);
  ASSERT_EQ(a.records.size(), 10u);
  ASSERT_EQ(times.size(), 10u);
  for (std::size_t v = 0; v < 10; ++v) {
    EXPECT_EQ(a.maps[v].depth, b.maps[v].depth);
    EXPECT_EQ(a.records[v].size(), pc.size());
    for (std::size_t n = 0; n < pc.size(); ++n) {
      EXPECT_EQ(a.records[v].entries[n].visible, b.records[v].entries[n].visible);
    }
  }
}

TEST(ProjectViews, EveryOccupiedColumnHasAVisiblePoint) {
  std::mt19937_64 rng(8);
  const auto pc = normalize_unit_cube(test::random_cloud(500, rng));
  const auto out = project_views(pc, make_view_set(ViewPreset::SixOrtho), GridConfig{});
  for (const auto& rec : out.records) {
    std::size_t visible = 0;
    for (const auto& e : rec.entries) visible += e.visible;
    EXPECT_GT(visible, 0u);
  }
}

TEST(Visibility, EpsilonZeroIsStrictZBuffer) {
  DepthMap native;
  native.height = native.width = 1;
  native.depth = {0.25f};
  native.intensity = {0.75f};
  native.background = {0};
  ProjectionRecord rec{1, 1, {{0, 0, 0.25f, false}, {0, 0, 0.26f, false}}};
  mark_visibility(rec, native, 0.0);
  EXPECT_TRUE(rec.entries[0].visible);
  EXPECT_FALSE(rec.entries[1].visible);
  mark_visibility(rec, native, 0.05);
  EXPECT_TRUE(rec.entries[1].visible);
}

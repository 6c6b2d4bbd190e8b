#include <gtest/gtest.h>

#include <algorithm>

#include "pc2depth/bench.hpp"
#include "pc2depth/error.hpp"

using namespace pc2depth;

TEST(Summarize, MedianAndNearestRankP90) {
  const auto s = summarize({5, 1, 3});
  EXPECT_DOUBLE_EQ(s.median_ms, 3);
  EXPECT_DOUBLE_EQ(s.p90_ms, 5);
  const auto e = summarize({4, 1, 2, 3});
  EXPECT_DOUBLE_EQ(e.median_ms, 2.5);
  std::vector<double> ten;
  for (int i = 1; i <= 10; ++i) ten.push_back(i);
  EXPECT_DOUBLE_EQ(summarize(ten).p90_ms, 9);
  EXPECT_THROW(summarize({}), Error);
}

TEST(BenchmarkCloud, DeterministicPerSeed) {
  EXPECT_EQ(make_benchmark_cloud(100, 1), make_benchmark_cloud(100, 1));
  EXPECT_NE(make_benchmark_cloud(100, 1), make_benchmark_cloud(100, 2));
  EXPECT_EQ(make_benchmark_cloud(100, 1).size(), 100u);
}

TEST(RunBenchmark, SmallRunReport) {
  RunConfig cfg;
  cfg.points = 256;
  cfg.views = "six-ortho";
  cfg.threads = 1;
  const auto r = run_benchmark(cfg, 3);
  EXPECT_EQ(r.points, 256u);
  EXPECT_EQ(r.views, 6u);
  EXPECT_EQ(r.reps, 3u);
  EXPECT_EQ(r.total_samples_ms.size(), 3u);
  EXPECT_EQ(r.config_hash, cfg.hash());
  EXPECT_DOUBLE_EQ(r.reference_ms, 16.7);
  EXPECT_GT(r.total.median_ms, 0.0);
  EXPECT_LE(r.total.median_ms, r.total.p90_ms);
  for (const char* stage : {"quantize", "densify", "smooth", "squeeze", "upsample"}) {
    EXPECT_TRUE(r.stages.count(stage)) << stage;
  }

  EXPECT_EQ(BenchReport::from_json(r.to_json()), r);
  const auto csv = r.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto svg = r.to_svg();
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  EXPECT_THROW(run_benchmark(cfg, 2), Error);
}

TEST(RunBenchmark, StageMediansNonNegativeAndQuantizeScalesWithPoints) {
  RunConfig small;
  small.points = 1024;
  small.threads = 1;
  RunConfig large = small;
  large.points = 8192;
  const auto a = run_benchmark(small, 7);
  const auto b = run_benchmark(large, 7);
  for (const auto& [name, s] : a.stages) EXPECT_GE(s.median_ms, 0.0) << name;
  EXPECT_LE(a.stages.at("quantize").p90_ms, b.stages.at("quantize").p90_ms * 1.1);
}

#pragma once

// Projection latency benchmark: wall time of projecting every view of a
// sampled cloud, with per-stage breakdown. Encoder time is not included.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pc2depth/point_cloud.hpp"
#include "pc2depth/run_config.hpp"

namespace pc2depth {

/// Latency reported for the reference implementation on its own hardware;
/// printed alongside local numbers for context only.
inline constexpr double kReferenceProjectionMs = 16.7;

struct StageStats {
  double median_ms = 0.0;
  double p90_ms = 0.0;

  friend bool operator==(const StageStats&, const StageStats&) = default;
};

/// Median and nearest-rank 90th percentile. Requires a non-empty sample.
StageStats summarize(std::vector<double> samples_ms);

struct BenchReport {
  std::size_t points = 0;
  std::size_t views = 0;
  std::size_t reps = 0;
  unsigned threads = 1;
  // Stage times summed over the views of one repetition.
  std::map<std::string, StageStats> stages;
  StageStats total;                   // full projection incl. upsampling
  StageStats total_without_upsample;  // same pipeline, native-resolution output
  std::vector<double> total_samples_ms;
  double reference_ms = kReferenceProjectionMs;
  std::string machine_note;
  std::string config_hash;
  std::string config_json;

  std::string to_json() const;
  static BenchReport from_json(std::string_view text);
  /// One row per repetition of the full-pipeline total.
  std::string to_csv() const;
  /// Bar chart of the per-stage medians and the totals.
  std::string to_svg() const;

  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// Points drawn on a noisy ellipsoid shell, deterministic per seed.
PointCloud make_benchmark_cloud(std::size_t n, std::uint64_t seed);

/// Runs one untimed warm-up and `reps` timed repetitions (reps >= 3).
BenchReport run_benchmark(const RunConfig& cfg, std::size_t reps);

std::string machine_note();

}  // namespace pc2depth

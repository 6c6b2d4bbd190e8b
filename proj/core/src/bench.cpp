#include "pc2depth/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pc2depth/error.hpp"
#include "pc2depth/projection.hpp"

namespace pc2depth {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kStageNames[] = {"quantize", "densify", "smooth", "squeeze", "upsample"};

double to_ms(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1e6; }

json stats_json(const StageStats& s) { return {{"median_ms", s.median_ms}, {"p90_ms", s.p90_ms}}; }

StageStats stats_from(const json& j) {
  return {j.at("median_ms").get<double>(), j.at("p90_ms").get<double>()};
}

}  // namespace

StageStats summarize(std::vector<double> samples) {
  if (samples.empty()) fail(ErrorKind::Domain, "cannot summarise an empty sample");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const double median =
      n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n)));
  return {median, samples[std::max<std::size_t>(rank, 1) - 1]};
}

PointCloud make_benchmark_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PointCloud pc;
  pc.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = gauss(rng), y = gauss(rng), z = gauss(rng);
    double r = std::sqrt(x * x + y * y + z * z);
    if (r == 0.0) x = r = 1.0;
    const double shell = 1.0 + 0.02 * gauss(rng);
    pc.points.push_back({static_cast<float>(0.9 * x / r * shell),
                         static_cast<float>(0.6 * y / r * shell),
                         static_cast<float>(0.4 * z / r * shell)});
  }
  return pc;
}

std::string machine_note() {
  std::string model;
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  if (model.empty()) model = "unknown cpu";
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

BenchReport run_benchmark(const RunConfig& cfg, std::size_t reps) {
  if (reps < 3) fail(ErrorKind::Domain, "benchmark needs at least 3 repetitions");
  if (cfg.points == 0) fail(ErrorKind::Domain, "benchmark needs a positive point count");

  const ViewSet views = cfg.resolve_views();
  const PointCloud cloud =
      sample_points(normalize_unit_cube(make_benchmark_cloud(cfg.points, cfg.seed)), cfg.points,
                    cfg.seed);

  BenchReport report;
  report.points = cfg.points;
  report.views = views.size();
  report.reps = reps;
  report.threads = std::max(cfg.threads, 1u);
  report.machine_note = machine_note();
  report.config_hash = cfg.hash();
  report.config_json = cfg.to_json();

  std::map<std::string, std::vector<double>> stage_samples;
  std::vector<double> totals, totals_native;

  auto timed = [&](bool upsample, std::vector<StageTimes>* per_view) {
    const auto t0 = Clock::now();
    auto out = project_views(cloud, views, cfg.grid, ProjectOptions{report.threads, upsample},
                             per_view);
    const auto t1 = Clock::now();
    if (out.maps.size() != views.size()) fail(ErrorKind::Domain, "projection lost a view");
    return to_ms(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0));
  };

  timed(true, nullptr);  // warm-up
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<StageTimes> per_view;
    totals.push_back(timed(true, &per_view));
    StageTimes sum;
    for (const auto& t : per_view) sum += t;
    stage_samples["quantize"].push_back(to_ms(sum.quantize));
    stage_samples["densify"].push_back(to_ms(sum.densify));
    stage_samples["smooth"].push_back(to_ms(sum.smooth));
    stage_samples["squeeze"].push_back(to_ms(sum.squeeze));
    stage_samples["upsample"].push_back(to_ms(sum.upsample));
  }
  timed(false, nullptr);
  for (std::size_t r = 0; r < reps; ++r) totals_native.push_back(timed(false, nullptr));

  for (const char* name : kStageNames) report.stages[name] = summarize(stage_samples[name]);
  report.total = summarize(totals);
  report.total_without_upsample = summarize(totals_native);
  report.total_samples_ms = std::move(totals);
  return report;
}

std::string BenchReport::to_json() const {
  json st = json::object();
  for (const auto& [name, s] : stages) st[name] = stats_json(s);
  json j{{"points", points},
         {"views", views},
         {"reps", reps},
         {"threads", threads},
         {"stages", st},
         {"total", stats_json(total)},
         {"total_without_upsample", stats_json(total_without_upsample)},
         {"total_samples_ms", total_samples_ms},
         {"reference_ms", reference_ms},
         {"machine_note", machine_note},
         {"config_hash", config_hash},
         {"config", config_json.empty() ? json(nullptr) : json::parse(config_json)}};
  return j.dump(2) + "\n";
}

BenchReport BenchReport::from_json(std::string_view text) {
  BenchReport r;
  try {
    const auto j = json::parse(text);
    r.points = j.at("points").get<std::size_t>();
    r.views = j.at("views").get<std::size_t>();
    r.reps = j.at("reps").get<std::size_t>();
    r.threads = j.at("threads").get<unsigned>();
    for (const auto& [name, s] : j.at("stages").items()) r.stages[name] = stats_from(s);
    r.total = stats_from(j.at("total"));
    r.total_without_upsample = stats_from(j.at("total_without_upsample"));
    r.total_samples_ms = j.at("total_samples_ms").get<std::vector<double>>();
    r.reference_ms = j.at("reference_ms").get<double>();
    r.machine_note = j.at("machine_note").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    if (!j.at("config").is_null()) r.config_json = j.at("config").dump();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("bad benchmark report: ") + e.what());
  }
  return r;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "rep,total_ms\n";
  for (std::size_t i = 0; i < total_samples_ms.size(); ++i) {
    out << i << ',' << total_samples_ms[i] << '\n';
  }
  return out.str();
}

std::string BenchReport::to_svg() const {
  std::vector<std::pair<std::string, double>> bars;
  for (const char* name : kStageNames) {
    const auto it = stages.find(name);
    bars.emplace_back(name, it == stages.end() ? 0.0 : it->second.median_ms);
  }
  bars.emplace_back("total", total.median_ms);
  bars.emplace_back("total (native)", total_without_upsample.median_ms);
  bars.emplace_back("reference", reference_ms);

  double peak = 1e-9;
  for (const auto& b : bars) peak = std::max(peak, b.second);
  const int bar_h = 22, gap = 8, label_w = 130, plot_w = 360;
  const int height = static_cast<int>(bars.size()) * (bar_h + gap) + 40;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + plot_w + 90
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"4\" y=\"16\">median latency, " << views << " views, " << points
      << " points (ms)</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int y = 28 + static_cast<int>(i) * (bar_h + gap);
    const int w = static_cast<int>(plot_w * bars[i].second / peak);
    svg << "<text x=\"4\" y=\"" << y + 15 << "\">" << bars[i].first << "</text>\n";
    svg << "<rect x=\"" << label_w << "\" y=\"" << y << "\" width=\"" << std::max(w, 1)
        << "\" height=\"" << bar_h << "\" fill=\"" << (bars[i].first == "reference" ? "#999" : "#4a7ab5")
        << "\"/>\n";
    svg << "<text x=\"" << label_w + std::max(w, 1) + 4 << "\" y=\"" << y + 15 << "\">"
        << bars[i].second << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pc2depth

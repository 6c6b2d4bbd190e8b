#include "cli_app.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "pc2depth/bench.hpp"
#include "pc2depth/depth_export.hpp"
#include "pc2depth/detection.hpp"
#include "pc2depth/error.hpp"
#include "pc2depth/inference.hpp"
#include "pc2depth/llm_client.hpp"
#include "pc2depth/pointcloud_io.hpp"
#include "pc2depth/prompt_engine.hpp"
#include "pc2depth/providers.hpp"
#include "pc2depth/run_config.hpp"

namespace pc2depth::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Raw flag values; resolved into a RunConfig after parsing.
struct CommonFlags {
  std::string grid = "112x112x8";
  double scale = 0.7;
  std::string pool = "6x6x2";
  std::string gauss = "3x3x1";
  std::string sigma = "auto";
  std::string out_size = "224x224";
  std::string vis_eps = "auto";
  std::string views = "ten-view";
  std::string alpha = "uniform";
  std::size_t points = 1024;
  std::uint64_t seed = 0;
  unsigned threads = 8;
  std::string provider;
  std::string llm;
  std::string cache = ".pc2depth-cache";
  std::string templates;
  std::size_t n_per_command = 20;
  double temperature = 0.7;
  int max_tokens = 40;
  std::string engine = "text-davinci-002";
  unsigned in_flight = 4;

  RunConfig resolve() const {
    RunConfig c;
    const auto g = parse_extent3(grid);
    c.grid.height = g[0];
    c.grid.width = g[1];
    c.grid.depth = g[2];
    c.grid.scale = scale;
    c.grid.pool_window = parse_extent3(pool);
    c.grid.gauss_size = parse_extent3(gauss);
    c.grid.gauss_sigma = parse_sigma(sigma);
    const auto o = parse_extent2(out_size);
    c.grid.out_height = o[0];
    c.grid.out_width = o[1];
    if (vis_eps != "auto") {
      try {
        c.grid.visibility_epsilon = std::stod(vis_eps);
      } catch (const std::exception&) {
        fail(ErrorKind::Usage, "bad --vis-eps '" + vis_eps + "'");
      }
    }
    try {
      c.grid.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Usage, e.what());
    }
    c.views = views;
    c.alpha = alpha;
    c.points = points;
    c.seed = seed;
    c.threads = threads;
    c.provider = provider;
    c.llm = llm;
    c.cache_dir = cache;
    c.templates = templates;
    c.generation.n_per_command = n_per_command;
    c.generation.temperature = temperature;
    c.generation.max_tokens = max_tokens;
    c.generation.engine = engine;
    c.generation.max_in_flight = in_flight;
    return c;
  }
};

void add_common_flags(CLI::App& app, CommonFlags& f) {
  app.add_option("--grid", f.grid, "voxel grid HxWxD")->capture_default_str();
  app.add_option("--scale", f.scale, "shape scale factor in (0,1]")->capture_default_str();
  app.add_option("--pool", f.pool, "densify min-pool window")->capture_default_str();
  app.add_option("--gauss", f.gauss, "gaussian kernel size")->capture_default_str();
  app.add_option("--sigma", f.sigma, "gaussian sigma: auto | s | sx,sy,sz")->capture_default_str();
  app.add_option("--out-size", f.out_size, "depth map size HxW")->capture_default_str();
  app.add_option("--vis-eps", f.vis_eps, "visibility tolerance (auto = 1.5/D)")->capture_default_str();
  app.add_option("--views", f.views, "ten-view | six-ortho | custom.json")->capture_default_str();
  app.add_option("--alpha", f.alpha, "uniform | weights.json")->capture_default_str();
  app.add_option("--points", f.points, "sample size (0 keeps every point)")->capture_default_str();
  app.add_option("--seed", f.seed, "sampling seed")->capture_default_str();
  app.add_option("--threads", f.threads, "projection worker threads")->capture_default_str();
  app.add_option("--provider", f.provider, "embedding provider file:DIR | http:URL");
  app.add_option("--llm", f.llm, "language model endpoint http:URL");
  app.add_option("--cache", f.cache, "description cache directory")->capture_default_str();
  app.add_option("--templates", f.templates, "command template JSON file");
  app.add_option("--n-per-command", f.n_per_command, "descriptions per command")->capture_default_str();
  app.add_option("--temperature", f.temperature, "sampling temperature")->capture_default_str();
  app.add_option("--max-tokens", f.max_tokens, "max description length")->capture_default_str();
  app.add_option("--engine", f.engine, "language model engine id")->capture_default_str();
  app.add_option("--in-flight", f.in_flight, "concurrent LLM requests")->capture_default_str();
}

PointCloud read_cloud(const std::string& path, const std::string& format) {
  const auto fmt = format.empty() ? guess_cloud_format(path) : parse_cloud_format(format);
  return load_point_cloud(path, fmt);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') out.push_back(line);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::unique_ptr<EmbeddingProvider> require_provider(const RunConfig& cfg) {
  if (cfg.provider.empty()) fail(ErrorKind::Usage, "--provider is required");
  return make_provider(cfg.provider);
}

// Text weights: explicit EMB1 file, else the provider's text.emb1, else
// descriptions encoded through the provider.
EmbeddingMatrix resolve_class_weights(const std::string& text_path,
                                      const std::string& descriptions_path,
                                      EmbeddingProvider& provider) {
  if (!text_path.empty()) return load_embedding_matrix(text_path);
  if (!descriptions_path.empty()) {
    std::ifstream in(descriptions_path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + descriptions_path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return encode_texts(DescriptionSet::from_json(text), provider);
  }
  if (auto w = provider.class_weights()) return *w;
  fail(ErrorKind::Usage, "no class weights: pass --text, --descriptions, or a provider with text.emb1");
}

class OfflineLlm final : public LlmEndpoint {
 public:
  std::vector<std::string> complete(const LlmRequest&) override {
    fail(ErrorKind::Transport, "no --llm endpoint configured");
  }
};

json classification_json(const ClassificationResult& r, const std::vector<std::string>& names) {
  json j{{"logits", r.logits}, {"predicted", r.predicted}, {"per_view_logits", r.per_view_logits}};
  if (r.predicted < names.size()) j["predicted_name"] = names[r.predicted];
  return j;
}

int cmd_project(const RunConfig& cfg, const std::string& in, const std::string& format,
                const std::string& out_dir, std::ostream& out) {
  const ViewSet views = cfg.resolve_views();
  PointCloud pc = normalize_unit_cube(read_cloud(in, format));
  if (cfg.points > 0) pc = sample_points(pc, cfg.points, cfg.seed);

  const auto proj = project_views(pc, views, cfg.grid, ProjectOptions{cfg.threads, true});
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < proj.maps.size(); ++i) {
    const std::string stem = "view_" + std::to_string(i);
    save_pgm(proj.maps[i], dir / (stem + ".pgm"));
    save_ppm(proj.maps[i], dir / (stem + ".ppm"));
    save_dmap(proj.maps[i], dir / (stem + ".dmap"));
    save_prec(proj.records[i], dir / (stem + ".prec"));
  }
  save_point_cloud(pc, dir / "points.xyz", CloudFormat::AsciiXyz);
  json summary{{"views", proj.maps.size()},
               {"points", pc.size()},
               {"grid", {cfg.grid.height, cfg.grid.width, cfg.grid.depth}},
               {"out_size", {cfg.grid.out_height, cfg.grid.out_width}},
               {"config_hash", cfg.hash()},
               {"config", json::parse(cfg.to_json())}};
  write_text(dir / "project.json", summary.dump(2) + "\n");
  out << "projected " << pc.size() << " points into " << proj.maps.size() << " views -> "
      << dir.string() << "\n";
  return 0;
}

struct PromptArgs {
  std::string classes_file;
  std::vector<std::string> classes;
  std::vector<std::string> parts;
  std::string object;
  std::string out = "descriptions.json";
  std::string commands_out;
  std::string dump_templates;
  bool commands_only = false;
};

int cmd_prompts(const RunConfig& cfg, const PromptArgs& a, std::ostream& out) {
  if (!a.dump_templates.empty()) {
    write_text(a.dump_templates, templates_to_json(default_templates()));
    out << "wrote " << default_templates().size() << " templates to " << a.dump_templates << "\n";
    if (a.classes.empty() && a.classes_file.empty() && a.parts.empty()) return 0;
  }

  CommandSet commands;
  if (!a.parts.empty()) {
    if (a.object.empty()) fail(ErrorKind::Usage, "--part requires --object");
    commands = build_part_commands(a.parts, a.object);
  } else {
    std::vector<std::string> names = a.classes;
    if (!a.classes_file.empty()) {
      const auto more = read_lines(a.classes_file);
      names.insert(names.end(), more.begin(), more.end());
    }
    if (names.empty()) fail(ErrorKind::Usage, "no classes given (--class or --classes)");
    const auto templates = cfg.templates.empty() ? default_templates() : load_templates(cfg.templates);
    commands = build_commands(names, templates);
  }

  if (!a.commands_out.empty() || a.commands_only) {
    json j = json::array();
    for (const auto& c : commands.classes) {
      json cmds = json::array();
      for (const auto& cmd : c.commands) {
        cmds.push_back({{"family", std::string(to_string(cmd.family))}, {"text", cmd.text}});
      }
      j.push_back({{"name", c.class_name}, {"commands", cmds}});
    }
    const std::string path = a.commands_out.empty() ? a.out : a.commands_out;
    write_text(path, j.dump(2) + "\n");
    out << "wrote " << commands.total() << " commands for " << commands.classes.size()
        << " classes to " << path << "\n";
    if (a.commands_only) return 0;
  }

  std::unique_ptr<LlmEndpoint> llm;
  if (cfg.llm.empty()) {
    llm = std::make_unique<OfflineLlm>();
  } else {
    std::string url = cfg.llm;
    if (url.starts_with("http:") && !url.starts_with("http://")) url = url.substr(5);
    llm = std::make_unique<HttpLlmClient>(url);
  }
  const auto ds = generate_descriptions(commands, *llm, cfg.generation, cfg.cache_dir);
  write_text(a.out, ds.to_json());
  std::size_t total = 0;
  for (const auto& c : ds.classes) total += c.descriptions.size();
  out << "wrote " << total << " descriptions for " << ds.classes.size() << " classes to " << a.out
      << "\n";
  return 0;
}

struct InferArgs {
  std::string in;
  std::string format;
  std::string text;
  std::string descriptions;
  std::string class_names;
  std::string out;
};

int cmd_classify(const RunConfig& cfg, const InferArgs& a, std::ostream& out) {
  PipelineConfig pipe;
  pipe.grid = cfg.grid;
  try {
    pipe.views = cfg.resolve_views();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) fail(ErrorKind::Usage, e.what());
    throw;
  }
  pipe.points = cfg.points;
  pipe.seed = cfg.seed;
  pipe.threads = cfg.threads;

  auto provider = require_provider(cfg);
  const auto weights = resolve_class_weights(a.text, a.descriptions, *provider);
  const auto pc = read_cloud(a.in, a.format);
  const auto result = classify_point_cloud(pc, pipe, weights, *provider);
  const auto names = a.class_names.empty() ? std::vector<std::string>{} : read_lines(a.class_names);

  json j = classification_json(result, names);
  j["config_hash"] = cfg.hash();
  if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
  out << "predicted class " << result.predicted;
  if (result.predicted < names.size()) out << " (" << names[result.predicted] << ")";
  out << " logit " << result.logits[result.predicted] << "\n";
  return 0;
}

struct SegmentArgs {
  InferArgs io;
  std::string labels_out = "labels.txt";
  std::string logits_out;
  std::string truth;
  std::string fallback = "all-views";
  bool softmax = false;
};

int cmd_segment(const RunConfig& cfg, const SegmentArgs& a, std::ostream& out) {
  const ViewSet views = cfg.resolve_views();
  auto provider = require_provider(cfg);
  const auto weights = resolve_class_weights(a.io.text, a.io.descriptions, *provider);
  const auto pc = read_cloud(a.io.in, a.io.format);

  BackProjectOptions opts;
  opts.average_softmax = a.softmax;
  if (a.fallback == "all-views") {
    opts.fallback = BackProjectFallback::AllViews;
  } else if (a.fallback == "uniform-prior") {
    opts.fallback = BackProjectFallback::UniformPrior;
  } else {
    fail(ErrorKind::Usage, "--fallback must be all-views or uniform-prior");
  }
  const auto seg = segment_point_cloud(pc, views, cfg.grid, weights, *provider, opts, cfg.threads);
  save_label_sidecar(seg.labels, a.labels_out);
  if (!a.logits_out.empty()) save_segl(seg, a.logits_out);

  json j{{"points", seg.points}, {"parts", seg.classes}, {"config_hash", cfg.hash()}};
  std::optional<std::vector<std::int32_t>> truth;
  if (!a.truth.empty()) {
    truth = load_label_sidecar(a.truth);
  } else if (pc.labels) {
    truth = *pc.labels;
  }
  if (truth) {
    std::vector<std::int32_t> parts(seg.classes);
    for (std::size_t k = 0; k < parts.size(); ++k) parts[k] = static_cast<std::int32_t>(k);
    const double miou = compute_miou({InstanceLabels{0, seg.labels, *truth}}, {{0, parts}});
    j["miou_instance"] = miou;
    out << "mIoU " << miou << "\n";
  }
  if (!a.io.out.empty()) write_text(a.io.out, j.dump(2) + "\n");
  out << "segmented " << seg.points << " points into " << seg.classes << " parts -> "
      << a.labels_out << "\n";
  return 0;
}

int cmd_detect(const RunConfig& cfg, const InferArgs& a, const std::string& boxes_path,
               std::size_t crop_points, std::ostream& out) {
  DetectionConfig dcfg;
  dcfg.pipeline.grid = cfg.grid;
  dcfg.pipeline.views = cfg.resolve_views();
  dcfg.pipeline.points = crop_points;
  dcfg.pipeline.seed = cfg.seed;
  dcfg.pipeline.threads = cfg.threads;

  auto provider = require_provider(cfg);
  const auto weights = resolve_class_weights(a.text, a.descriptions, *provider);
  const auto scene = read_cloud(a.in, a.format);
  const auto boxes = load_boxes(boxes_path);
  const auto dets = detect_zero_shot(scene, boxes, weights, *provider, dcfg);
  const std::string path = a.out.empty() ? "detections.json" : a.out;
  write_text(path, boxes_to_json(dets));
  std::size_t labelled = 0;
  for (const auto& d : dets) labelled += d.label ? 1 : 0;
  out << "classified " << labelled << " of " << dets.size() << " boxes -> " << path << "\n";
  return 0;
}

struct BenchArgs {
  std::size_t reps = 100;
  std::string out = "bench.json";
  std::string csv;
  std::string svg;
};

int cmd_bench(const RunConfig& cfg, const BenchArgs& a, std::ostream& out) {
  const auto report = run_benchmark(cfg, a.reps);
  write_text(a.out, report.to_json());
  if (!a.csv.empty()) write_text(a.csv, report.to_csv());
  if (!a.svg.empty()) write_text(a.svg, report.to_svg());
  out << "projection of " << report.points << " points into " << report.views << " views ("
      << report.threads << " threads, " << report.reps << " reps)\n";
  for (const auto& [name, s] : report.stages) {
    out << "  " << name << ": median " << s.median_ms << " ms, p90 " << s.p90_ms << " ms\n";
  }
  out << "  total: median " << report.total.median_ms << " ms, p90 " << report.total.p90_ms
      << " ms\n";
  out << "  total without upsample: median " << report.total_without_upsample.median_ms
      << " ms\n";
  out << "  reference (other hardware): " << report.reference_ms << " ms\n";
  out << "  machine: " << report.machine_note << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pc2depth: point cloud depth projection and zero-shot inference"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config file mirroring the flags");

  CommonFlags flags;
  add_common_flags(app, flags);

  std::string in, format, out_dir;
  auto* project = app.add_subcommand("project", "project a cloud into depth maps");
  project->add_option("--in", in, "input point cloud")->required();
  project->add_option("--format", format, "ascii-xyz | binary-pcv2 (default: by extension)");
  project->add_option("--out", out_dir, "output directory")->required();

  PromptArgs pa;
  auto* prompts = app.add_subcommand("prompts", "build commands and fetch descriptions");
  prompts->add_option("--classes", pa.classes_file, "file with one class name per line");
  prompts->add_option("--class", pa.classes, "class name (repeatable)");
  prompts->add_option("--part", pa.parts, "part name (repeatable, needs --object)");
  prompts->add_option("--object", pa.object, "object class for part commands");
  prompts->add_option("--out", pa.out, "description set JSON")->capture_default_str();
  prompts->add_option("--commands-out", pa.commands_out, "also write the command set JSON");
  prompts->add_flag("--commands-only", pa.commands_only, "write commands and stop");
  prompts->add_option("--dump-templates", pa.dump_templates, "write the default templates");

  auto add_infer = [](CLI::App* sub, InferArgs& a) {
    sub->add_option("--in", a.in, "input point cloud")->required();
    sub->add_option("--format", a.format, "ascii-xyz | binary-pcv2");
    sub->add_option("--text", a.text, "class weight EMB1 file");
    sub->add_option("--descriptions", a.descriptions, "description set JSON to encode");
    sub->add_option("--out", a.out, "result JSON");
  };

  InferArgs ca;
  auto* classify = app.add_subcommand("classify", "zero-shot classification");
  add_infer(classify, ca);
  classify->add_option("--class-names", ca.class_names, "file with one class name per line");

  SegmentArgs sa;
  auto* segment = app.add_subcommand("segment", "zero-shot part segmentation");
  add_infer(segment, sa.io);
  segment->add_option("--labels-out", sa.labels_out, "predicted part id per line")
      ->capture_default_str();
  segment->add_option("--logits-out", sa.logits_out, "SEGL logits file");
  segment->add_option("--truth", sa.truth, "ground-truth label sidecar for mIoU");
  segment->add_option("--fallback", sa.fallback, "all-views | uniform-prior")->capture_default_str();
  segment->add_flag("--softmax", sa.softmax, "average softmax probabilities across views");

  InferArgs da;
  std::string boxes_path;
  std::size_t crop_points = 1024;
  auto* detect = app.add_subcommand("detect", "classify the contents of given 3D boxes");
  add_infer(detect, da);
  detect->add_option("--boxes", boxes_path, "boxes JSON")->required();
  detect->add_option("--crop-points", crop_points, "points sampled per box")->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "projection latency benchmark");
  bench->add_option("--reps", ba.reps, "timed repetitions (>= 3)")->capture_default_str();
  bench->add_option("--out", ba.out, "report JSON")->capture_default_str();
  bench->add_option("--csv", ba.csv, "per-repetition CSV");
  bench->add_option("--svg", ba.svg, "stage latency SVG chart");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code(ErrorKind::Usage);
  }

  try {
    const RunConfig cfg = flags.resolve();
    if (project->parsed()) return cmd_project(cfg, in, format, out_dir, out);
    if (prompts->parsed()) return cmd_prompts(cfg, pa, out);
    if (classify->parsed()) return cmd_classify(cfg, ca, out);
    if (segment->parsed()) return cmd_segment(cfg, sa, out);
    if (detect->parsed()) return cmd_detect(cfg, da, boxes_path, crop_points, out);
    if (bench->parsed()) return cmd_bench(cfg, ba, out);
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  }
  err << "usage error: no subcommand\n";
  return exit_code(ErrorKind::Usage);
}

}  // namespace pc2depth::cli

#include "pc2depth/run_config.hpp"

#include <charconv>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "pc2depth/content_hash.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

using json = nlohmann::json;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_positive_int(std::string_view tok, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v <= 0) {
    fail(ErrorKind::Usage, "bad size '" + std::string(whole) + "'");
  }
  return v;
}

double parse_double(std::string_view tok, std::string_view whole) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    fail(ErrorKind::Usage, "bad number '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Extent3 parse_extent3(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 3) fail(ErrorKind::Usage, "expected AxBxC, got '" + std::string(text) + "'");
  return {parse_positive_int(parts[0], text), parse_positive_int(parts[1], text),
          parse_positive_int(parts[2], text)};
}

std::array<int, 2> parse_extent2(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 2) fail(ErrorKind::Usage, "expected AxB, got '" + std::string(text) + "'");
  return {parse_positive_int(parts[0], text), parse_positive_int(parts[1], text)};
}

std::optional<Sigma3> parse_sigma(std::string_view text) {
  if (text == "auto") return std::nullopt;
  const auto parts = split(text, ',');
  Sigma3 s{};
  if (parts.size() == 1) {
    s.fill(parse_double(parts[0], text));
  } else if (parts.size() == 3) {
    for (int a = 0; a < 3; ++a) s[a] = parse_double(parts[a], text);
  } else {
    fail(ErrorKind::Usage, "sigma must be 'auto', 's' or 'sx,sy,sz'");
  }
  for (double v : s) {
    if (!(v > 0.0)) fail(ErrorKind::Usage, "sigma must be positive");
  }
  return s;
}

std::string format_extent3(const Extent3& e) {
  return std::to_string(e[0]) + "x" + std::to_string(e[1]) + "x" + std::to_string(e[2]);
}

ViewSet RunConfig::resolve_views() const {
  ViewSet vs;
  if (views == "ten-view" || views == "six-ortho") {
    vs = make_view_set(parse_view_preset(views));
  } else {
    vs = make_view_set(ViewPreset::Custom, load_custom_views(views));
  }
  if (alpha != "uniform") {
    json doc;
    try {
      doc = json::parse(detail::read_file_text(alpha));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Format, alpha + ": " + e.what());
    }
    if (!doc.is_array()) fail(ErrorKind::Format, alpha + ": expected a JSON list of weights");
    std::vector<double> w;
    for (const auto& x : doc) {
      if (!x.is_number()) fail(ErrorKind::Format, alpha + ": weights must be numbers");
      w.push_back(x.get<double>());
    }
    set_view_weights(vs, std::move(w));
  }
  return vs;
}

std::string RunConfig::to_json() const {
  json g{{"height", grid.height},
         {"width", grid.width},
         {"depth", grid.depth},
         {"scale", grid.scale},
         {"pool_window", grid.pool_window},
         {"gauss_size", grid.gauss_size},
         {"gauss_sigma", grid.gauss_sigma ? json(*grid.gauss_sigma) : json("auto")},
         {"out_height", grid.out_height},
         {"out_width", grid.out_width},
         {"visibility_epsilon",
          grid.visibility_epsilon ? json(*grid.visibility_epsilon) : json("auto")}};
  json j{{"grid", g},
         {"views", views},
         {"alpha", alpha},
         {"points", points},
         {"seed", seed},
         {"threads", threads},
         {"provider", provider},
         {"llm", llm},
         {"cache_dir", cache_dir},
         {"templates", templates},
         {"generation",
          {{"n_per_command", generation.n_per_command},
           {"temperature", generation.temperature},
           {"max_tokens", generation.max_tokens},
           {"engine", generation.engine},
           {"max_in_flight", generation.max_in_flight}}}};
  return j.dump();
}

RunConfig RunConfig::from_json(std::string_view text) {
  RunConfig c;
  try {
    const auto j = json::parse(text);
    const auto& g = j.at("grid");
    c.grid.height = g.at("height").get<int>();
    c.grid.width = g.at("width").get<int>();
    c.grid.depth = g.at("depth").get<int>();
    c.grid.scale = g.at("scale").get<double>();
    c.grid.pool_window = g.at("pool_window").get<Extent3>();
    c.grid.gauss_size = g.at("gauss_size").get<Extent3>();
    if (g.at("gauss_sigma").is_array()) c.grid.gauss_sigma = g.at("gauss_sigma").get<Sigma3>();
    c.grid.out_height = g.at("out_height").get<int>();
    c.grid.out_width = g.at("out_width").get<int>();
    if (g.at("visibility_epsilon").is_number()) {
      c.grid.visibility_epsilon = g.at("visibility_epsilon").get<double>();
    }
    c.views = j.at("views").get<std::string>();
    c.alpha = j.at("alpha").get<std::string>();
    c.points = j.at("points").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<unsigned>();
    c.provider = j.at("provider").get<std::string>();
    c.llm = j.at("llm").get<std::string>();
    c.cache_dir = j.at("cache_dir").get<std::string>();
    c.templates = j.at("templates").get<std::string>();
    const auto& gen = j.at("generation");
    c.generation.n_per_command = gen.at("n_per_command").get<std::size_t>();
    c.generation.temperature = gen.at("temperature").get<double>();
    c.generation.max_tokens = gen.at("max_tokens").get<int>();
    c.generation.engine = gen.at("engine").get<std::string>();
    c.generation.max_in_flight = gen.at("max_in_flight").get<unsigned>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("bad run config: ") + e.what());
  }
  return c;
}

std::string RunConfig::hash() const { return sha256_hex(to_json()); }

}  // namespace pc2depth

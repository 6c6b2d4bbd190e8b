#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "pc2depth/projection.hpp"
#include "pc2depth/prompt_engine.hpp"
#include "pc2depth/view_transform.hpp"

namespace pc2depth {

/// Everything a run depends on. Serialises to canonical JSON; the SHA-256
/// of that JSON identifies the run in reports.
struct RunConfig {
  GridConfig grid;
  std::string views = "ten-view";  // preset name or path to a custom view JSON file
  std::string alpha = "uniform";   // "uniform" or path to a JSON list of weights
  std::size_t points = 1024;
  std::uint64_t seed = 0;
  unsigned threads = 8;
  std::string provider;  // file:DIR or http:URL
  std::string llm;       // http:URL
  std::string cache_dir = ".pc2depth-cache";
  std::string templates;  // empty: built-in templates
  GenerationParams generation;

  /// Builds the view set from `views` and applies `alpha`.
  ViewSet resolve_views() const;

  std::string to_json() const;
  static RunConfig from_json(std::string_view text);
  std::string hash() const;
};

// Flag value parsers shared by the CLI and config files.
Extent3 parse_extent3(std::string_view text);          // "6x6x2"
std::array<int, 2> parse_extent2(std::string_view text);  // "224x224"
/// "auto" yields nullopt; otherwise "s" or "sx,sy,sz".
std::optional<Sigma3> parse_sigma(std::string_view text);
std::string format_extent3(const Extent3& e);

}  // namespace pc2depth

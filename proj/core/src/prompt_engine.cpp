#include "pc2depth/prompt_engine.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>

#include "binary_io.hpp"
#include "json.hpp"
#include "pc2depth/content_hash.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

using json = nlohmann::json;

std::vector<CommandTemplate> make_defaults() {
  const char* captions[] = {
      "Describe a depth map of a [CLASS]:",
      "Describe a grayscale depth map of a [CLASS]:",
      "Write a caption for a depth map of a [CLASS]:",
      "Describe the shape of a [CLASS] in a depth map:",
      "Describe a smooth depth map of a [CLASS]:",
      "Describe a rendered depth image of a [CLASS]:",
      "Write a short caption for a 3D depth map showing a [CLASS]:",
      "Describe the silhouette of a [CLASS] in a depth map:",
      "Describe a depth map of a [CLASS] seen from the side:",
      "Describe a depth map of a [CLASS] seen from above:",
      "Describe a point cloud depth map of a [CLASS]:",
      "Describe what a [CLASS] looks like in a depth map:",
      "Give a caption for a monochrome depth image of a [CLASS]:",
  };
  const char* questions[] = {
      "How to describe a depth map of a [CLASS]?",
      "What does a depth map of a [CLASS] look like?",
      "How can you identify a [CLASS] in a depth map?",
      "What are the shape features of a [CLASS] in a depth map?",
      "How does a [CLASS] appear in a grayscale depth map?",
      "What parts of a [CLASS] are visible in a depth map?",
      "How would you recognize a [CLASS] from its depth map?",
      "What geometry distinguishes a [CLASS] in a depth map?",
      "How is the outline of a [CLASS] shown in a depth map?",
      "What does the surface of a [CLASS] look like in a depth map?",
      "How does a depth map capture the structure of a [CLASS]?",
      "Which contours of a [CLASS] stand out in a depth map?",
      "How would a smooth depth map of a [CLASS] look?",
  };
  const char* paraphrases[] = {
      "Generate a synonym for the sentence: A grayscale depth map of an inclined [CLASS].",
      "Generate a synonym for the sentence: A depth map of a [CLASS].",
      "Generate a synonym for the sentence: A smooth depth map of a [CLASS] from the front.",
      "Paraphrase the sentence: A monochrome depth image of a [CLASS].",
      "Paraphrase the sentence: A rendered depth map showing the shape of a [CLASS].",
      "Rewrite the sentence: A grayscale depth map of a [CLASS] seen from above.",
      "Rewrite the sentence: A dark depth image of a [CLASS] on a plain background.",
      "Generate a synonym for the sentence: A 3D depth map of a tilted [CLASS].",
      "Paraphrase the sentence: The depth map depicts a [CLASS] with sharp edges.",
      "Rewrite the sentence: A depth map of a [CLASS] viewed from the side.",
      "Generate a synonym for the sentence: A blurry depth map of a [CLASS].",
      "Paraphrase the sentence: A point cloud projected into a depth map of a [CLASS].",
  };
  const char* words[] = {
      "Make a sentence using these words: a [CLASS], depth map, smooth.",
      "Make a sentence using these words: a [CLASS], depth map, grayscale.",
      "Make a sentence using these words: a [CLASS], depth image, shape.",
      "Make a sentence using these words: a [CLASS], depth map, edges.",
      "Make a sentence using these words: a [CLASS], depth map, silhouette.",
      "Make a sentence using these words: a [CLASS], 3D, depth map.",
      "Make a sentence using these words: a [CLASS], depth map, dark.",
      "Make a sentence using these words: a [CLASS], depth map, surface.",
      "Make a sentence using these words: a [CLASS], depth map, contour.",
      "Make a sentence using these words: a [CLASS], point cloud, depth map.",
      "Make a sentence using these words: a [CLASS], depth map, corner.",
      "Make a sentence using these words: a [CLASS], monochrome, depth map.",
  };
  std::vector<CommandTemplate> out;
  for (const char* t : captions) out.push_back({CommandFamily::Caption, t});
  for (const char* t : questions) out.push_back({CommandFamily::Question, t});
  for (const char* t : paraphrases) out.push_back({CommandFamily::Paraphrase, t});
  for (const char* t : words) out.push_back({CommandFamily::Words, t});
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

void check_name(std::string_view name, const char* what) {
  if (name.empty()) fail(ErrorKind::Domain, std::string(what) + " name must not be empty");
  if (name.find(kClassPlaceholder) != std::string_view::npos ||
      name.find(kPartPlaceholder) != std::string_view::npos) {
    fail(ErrorKind::Domain, std::string(what) + " name must not contain a placeholder");
  }
}

}  // namespace

std::string_view to_string(CommandFamily f) {
  switch (f) {
    case CommandFamily::Caption: return "caption";
    case CommandFamily::Question: return "question";
    case CommandFamily::Paraphrase: return "paraphrase";
    case CommandFamily::Words: return "words";
  }
  return "caption";
}

CommandFamily parse_command_family(std::string_view name) {
  for (auto f : {CommandFamily::Caption, CommandFamily::Question, CommandFamily::Paraphrase,
                 CommandFamily::Words}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorKind::Format, "unknown command family '" + std::string(name) + "'");
}

const std::vector<CommandTemplate>& default_templates() {
  static const std::vector<CommandTemplate> defaults = make_defaults();
  return defaults;
}

std::vector<CommandTemplate> load_templates(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(detail::read_file_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::Format, path.string() + ": expected a JSON list");
  std::vector<CommandTemplate> out;
  for (const auto& e : doc) {
    if (!e.is_object() || !e.contains("family") || !e.contains("text") ||
        !e["family"].is_string() || !e["text"].is_string()) {
      fail(ErrorKind::Format, path.string() + ": template entries need string family/text");
    }
    out.push_back({parse_command_family(e["family"].get<std::string>()),
                   e["text"].get<std::string>()});
  }
  return out;
}

std::string templates_to_json(const std::vector<CommandTemplate>& templates) {
  json doc = json::array();
  for (const auto& t : templates) {
    doc.push_back({{"family", std::string(to_string(t.family))}, {"text", t.text}});
  }
  return doc.dump(2) + "\n";
}

std::size_t CommandSet::total() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.commands.size();
  return n;
}

CommandSet build_commands(const std::vector<std::string>& class_names,
                          const std::vector<CommandTemplate>& templates) {
  for (const auto& t : templates) {
    if (t.text.find(kClassPlaceholder) == std::string::npos) {
      fail(ErrorKind::Domain, "template lacks the [CLASS] placeholder: \"" + t.text + "\"");
    }
    if (t.text.find(kPartPlaceholder) != std::string::npos) {
      fail(ErrorKind::Domain, "class templates must not use [PART]: \"" + t.text + "\"");
    }
  }
  CommandSet set;
  for (const auto& name : class_names) {
    check_name(name, "class");
    ClassCommands cc{name, {}};
    cc.commands.reserve(templates.size());
    for (const auto& t : templates) {
      cc.commands.push_back({t.family, replace_all(t.text, kClassPlaceholder, name)});
    }
    set.classes.push_back(std::move(cc));
  }
  return set;
}

std::string build_part_command(std::string_view part, std::string_view class_name) {
  check_name(part, "part");
  check_name(class_name, "class");
  return "Describe the " + std::string(part) + " part of a " + std::string(class_name) +
         " in a depth map:";
}

CommandSet build_part_commands(const std::vector<std::string>& parts,
                               std::string_view class_name) {
  CommandSet set;
  for (const auto& p : parts) {
    set.classes.push_back({p, {{CommandFamily::Caption, build_part_command(p, class_name)}}});
  }
  return set;
}

std::string DescriptionSet::to_json() const {
  json doc;
  doc["engine"] = engine;
  doc["temperature"] = temperature;
  doc["max_tokens"] = max_tokens;
  doc["n_per_command"] = n_per_command;
  json cls = json::array();
  for (const auto& c : classes) {
    json ds = json::array();
    for (const auto& d : c.descriptions) {
      ds.push_back({{"family", std::string(to_string(d.family))}, {"text", d.text}});
    }
    cls.push_back({{"name", c.class_name}, {"descriptions", std::move(ds)}});
  }
  doc["classes"] = std::move(cls);
  return doc.dump(2) + "\n";
}

DescriptionSet DescriptionSet::from_json(std::string_view text) {
  DescriptionSet out;
  try {
    const auto doc = json::parse(text);
    out.engine = doc.at("engine").get<std::string>();
    out.temperature = doc.at("temperature").get<double>();
    out.max_tokens = doc.at("max_tokens").get<int>();
    out.n_per_command = doc.at("n_per_command").get<std::size_t>();
    for (const auto& c : doc.at("classes")) {
      ClassDescriptions cd{c.at("name").get<std::string>(), {}};
      for (const auto& d : c.at("descriptions")) {
        cd.descriptions.push_back({parse_command_family(d.at("family").get<std::string>()),
                                   d.at("text").get<std::string>()});
      }
      out.classes.push_back(std::move(cd));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("bad description set: ") + e.what());
  }
  return out;
}

std::string cache_file_name(const LlmRequest& request) {
  return sha256_hex(request.to_json()) + ".json";
}

namespace {

std::optional<std::vector<std::string>> read_cache(const std::filesystem::path& file,
                                                   const LlmRequest& request) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(file, ec)) return std::nullopt;
  try {
    const auto doc = json::parse(detail::read_file_text(file));
    if (doc.at("request").dump() != json::parse(request.to_json()).dump()) return std::nullopt;
    return doc.at("descriptions").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entries are refetched and overwritten
  }
}

void write_cache(const std::filesystem::path& file, const LlmRequest& request,
                 const std::vector<std::string>& descriptions) {
  json doc{{"request", json::parse(request.to_json())}, {"descriptions", descriptions}};
  detail::write_file_atomic(file, doc.dump(2) + "\n");
}

}  // namespace

DescriptionSet generate_descriptions(const CommandSet& commands, LlmEndpoint& client,
                                     const GenerationParams& params,
                                     const std::filesystem::path& cache_dir) {
  if (params.n_per_command == 0) fail(ErrorKind::Domain, "n_per_command must be >= 1");
  if (!(params.temperature >= 0.0)) fail(ErrorKind::Domain, "temperature must be >= 0");
  if (params.max_tokens <= 0) fail(ErrorKind::Domain, "max_tokens must be positive");

  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create cache directory " + cache_dir.string());

  // Distinct command strings in first-appearance order.
  std::vector<std::string> unique;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& c : commands.classes) {
    for (const auto& cmd : c.commands) {
      if (slot.emplace(cmd.text, unique.size()).second) unique.push_back(cmd.text);
    }
  }

  auto request_for = [&](const std::string& text) {
    return LlmRequest{text, params.n_per_command, params.temperature, params.max_tokens,
                      params.engine};
  };

  std::vector<std::optional<std::vector<std::string>>> replies(unique.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    const auto req = request_for(unique[i]);
    replies[i] = read_cache(cache_dir / cache_file_name(req), req);
    if (!replies[i]) pending.push_back(i);
  }

  std::vector<std::exception_ptr> protocol_errors(unique.size());
  std::vector<std::uint8_t> transport_failed(unique.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t p; (p = next.fetch_add(1)) < pending.size();) {
      const std::size_t i = pending[p];
      const auto req = request_for(unique[i]);
      try {
        auto got = client.complete(req);
        if (got.size() > params.n_per_command) got.resize(params.n_per_command);
        write_cache(cache_dir / cache_file_name(req), req, got);
        replies[i] = std::move(got);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Transport) {
          transport_failed[i] = 1;
        } else {
          protocol_errors[i] = std::current_exception();
        }
      } catch (...) {
        protocol_errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max(params.max_in_flight, 1u), pending.size());
  if (workers == 1) {
    worker();
  } else if (workers > 1) {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (const auto& e : protocol_errors) {
    if (e) std::rethrow_exception(e);
  }
  std::string unfulfilled;
  std::size_t n_failed = 0;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    if (transport_failed[i]) {
      ++n_failed;
      unfulfilled += "\n  " + unique[i];
    }
  }
  if (n_failed) {
    fail(ErrorKind::Transport, "LLM endpoint unavailable; " + std::to_string(n_failed) +
                                   " uncached command(s):" + unfulfilled);
  }

  DescriptionSet out;
  out.n_per_command = params.n_per_command;
  out.temperature = params.temperature;
  out.max_tokens = params.max_tokens;
  out.engine = params.engine;
  for (const auto& c : commands.classes) {
    ClassDescriptions cd{c.class_name, {}};
    for (const auto& cmd : c.commands) {
      for (const auto& text : *replies[slot.at(cmd.text)]) {
        cd.descriptions.push_back({cmd.family, text});
      }
    }
    out.classes.push_back(std::move(cd));
  }
  return out;
}

}  // namespace pc2depth

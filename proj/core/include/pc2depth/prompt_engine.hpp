#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pc2depth/llm_client.hpp"

namespace pc2depth {

enum class CommandFamily { Caption, Question, Paraphrase, Words };

std::string_view to_string(CommandFamily f);
CommandFamily parse_command_family(std::string_view name);

inline constexpr std::string_view kClassPlaceholder = "[CLASS]";
inline constexpr std::string_view kPartPlaceholder = "[PART]";

struct CommandTemplate {
  CommandFamily family = CommandFamily::Caption;
  std::string text;

  friend bool operator==(const CommandTemplate&, const CommandTemplate&) = default;
};

/// The shipped template set: 13 caption, 13 question, 12 paraphrase, 12 words.
const std::vector<CommandTemplate>& default_templates();

/// Template files are a JSON list of {"family": ..., "text": ...}.
std::vector<CommandTemplate> load_templates(const std::filesystem::path& path);
std::string templates_to_json(const std::vector<CommandTemplate>& templates);

struct Command {
  CommandFamily family = CommandFamily::Caption;
  std::string text;

  friend bool operator==(const Command&, const Command&) = default;
};

struct ClassCommands {
  std::string class_name;
  std::vector<Command> commands;
};

struct CommandSet {
  std::vector<ClassCommands> classes;

  std::size_t total() const;
};

/// Instantiates every template once per class, in class-then-template order.
/// Throws a domain error when a template lacks "[CLASS]" or a class name is
/// empty or itself contains a placeholder.
CommandSet build_commands(const std::vector<std::string>& class_names,
                          const std::vector<CommandTemplate>& templates = default_templates());

/// "Describe the {part} part of a {class} in a depth map:"
std::string build_part_command(std::string_view part, std::string_view class_name);

/// One command per part of `class_name`, tagged as captions.
CommandSet build_part_commands(const std::vector<std::string>& parts,
                               std::string_view class_name);

struct GenerationParams {
  std::size_t n_per_command = 20;
  double temperature = 0.7;
  int max_tokens = 40;
  std::string engine = "text-davinci-002";
  unsigned max_in_flight = 4;
};

struct Description {
  CommandFamily family = CommandFamily::Caption;
  std::string text;

  friend bool operator==(const Description&, const Description&) = default;
};

struct ClassDescriptions {
  std::string class_name;
  std::vector<Description> descriptions;

  friend bool operator==(const ClassDescriptions&, const ClassDescriptions&) = default;
};

struct DescriptionSet {
  std::vector<ClassDescriptions> classes;
  std::size_t n_per_command = 0;
  double temperature = 0.0;
  int max_tokens = 0;
  std::string engine;

  std::string to_json() const;
  static DescriptionSet from_json(std::string_view text);

  friend bool operator==(const DescriptionSet&, const DescriptionSet&) = default;
};

/// Cache file name (without directory) for one request: SHA-256 of the
/// request's canonical JSON plus ".json".
std::string cache_file_name(const LlmRequest& request);

/// Queries `client` for every distinct command not already cached under
/// `cache_dir`, writes each reply atomically to the cache, and assembles
/// the per-class description lists in command order. Duplicate command
/// strings are requested once.
DescriptionSet generate_descriptions(const CommandSet& commands, LlmEndpoint& client,
                                     const GenerationParams& params,
                                     const std::filesystem::path& cache_dir);

}  // namespace pc2depth

#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pc2depth {

struct LlmRequest {
  std::string command;
  std::size_t n = 20;
  double temperature = 0.7;
  int max_tokens = 40;
  std::string engine = "text-davinci-002";

  /// {"command", "n", "temperature", "max_tokens", "engine"} with sorted keys.
  std::string to_json() const;
};

/// A text-completion service returning up to `n` candidate descriptions.
/// Implementations must be safe to call from several threads at once.
class LlmEndpoint {
 public:
  virtual ~LlmEndpoint() = default;
  virtual std::vector<std::string> complete(const LlmRequest& request) = 0;
};

/// Parses {"descriptions": [str, ...]}; anything else is a protocol error.
std::vector<std::string> parse_llm_reply(std::string_view body);

/// POSTs the request JSON to an HTTP endpoint.
class HttpLlmClient final : public LlmEndpoint {
 public:
  explicit HttpLlmClient(std::string url,
                         std::chrono::seconds timeout = std::chrono::seconds(60));
  std::vector<std::string> complete(const LlmRequest& request) override;

 private:
  std::string origin_;
  std::string path_;
  std::chrono::seconds timeout_;
};

}  // namespace pc2depth

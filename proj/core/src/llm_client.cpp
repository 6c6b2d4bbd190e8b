#include "pc2depth/llm_client.hpp"

#include "httplib.h"
#include "json.hpp"

#include "http_util.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace detail {

HttpUrl parse_http_url(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    fail(ErrorKind::Usage, "expected an http:// URL, got '" + std::string(url) + "'");
  }
  const auto rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  HttpUrl out;
  out.origin = std::string(scheme) + std::string(rest.substr(0, slash));
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (out.origin.size() == scheme.size()) fail(ErrorKind::Usage, "URL has no host");
  return out;
}

}  // namespace detail

std::string LlmRequest::to_json() const {
  nlohmann::json j{{"command", command},
                   {"n", n},
                   {"temperature", temperature},
                   {"max_tokens", max_tokens},
                   {"engine", engine}};
  return j.dump();
}

std::vector<std::string> parse_llm_reply(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Protocol, std::string("LLM reply is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("descriptions") || !j["descriptions"].is_array()) {
    fail(ErrorKind::Protocol, "LLM reply lacks a \"descriptions\" list");
  }
  std::vector<std::string> out;
  for (const auto& d : j["descriptions"]) {
    if (!d.is_string()) fail(ErrorKind::Protocol, "LLM reply has a non-string description");
    out.push_back(d.get<std::string>());
  }
  return out;
}

HttpLlmClient::HttpLlmClient(std::string url, std::chrono::seconds timeout)
    : timeout_(timeout) {
  auto parsed = detail::parse_http_url(url);
  origin_ = std::move(parsed.origin);
  path_ = std::move(parsed.path);
}

std::vector<std::string> HttpLlmClient::complete(const LlmRequest& request) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  auto res = cli.Post(path_, request.to_json(), "application/json");
  if (!res) {
    fail(ErrorKind::Transport,
         "LLM endpoint " + origin_ + path_ + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    fail(res->status >= 500 ? ErrorKind::Transport : ErrorKind::Protocol,
         "LLM endpoint returned HTTP " + std::to_string(res->status));
  }
  return parse_llm_reply(res->body);
}

}  // namespace pc2depth

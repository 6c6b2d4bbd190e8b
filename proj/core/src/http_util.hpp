#pragma once

#include <string>
#include <string_view>

namespace pc2depth::detail {

struct HttpUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

/// Splits "http://host:port/path". Only plain http is supported.
HttpUrl parse_http_url(std::string_view url);

}  // namespace pc2depth::detail

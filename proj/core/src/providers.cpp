#include "pc2depth/providers.hpp"

#include "httplib.h"
#include "json.hpp"

#include "binary_io.hpp"
#include "http_util.hpp"
#include "pc2depth/depth_export.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

using json = nlohmann::json;

json parse_reply_json(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Protocol, std::string("embedding reply is not JSON: ") + e.what());
  }
}

std::vector<float> float_array(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    fail(ErrorKind::Protocol, std::string("embedding reply lacks \"") + field + "\" list");
  }
  std::vector<float> out;
  out.reserve(j[field].size());
  for (const auto& x : j[field]) {
    if (!x.is_number()) fail(ErrorKind::Protocol, "embedding reply has a non-numeric entry");
    out.push_back(x.get<float>());
  }
  return out;
}

std::size_t positive_field(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number_integer() || j[field].get<long long>() <= 0) {
    fail(ErrorKind::Protocol, std::string("embedding reply needs a positive \"") + field + "\"");
  }
  return j[field].get<std::size_t>();
}

}  // namespace

std::vector<float> EmbeddingProvider::embed_text(const std::string&) {
  fail(ErrorKind::Capability, "embedding provider cannot encode text");
}

DenseFeature EmbeddingProvider::embed_view_dense(const DepthMap&, const ViewKey&) {
  fail(ErrorKind::Capability, "embedding provider has no dense mode");
}

std::vector<float> parse_global_reply(std::string_view body) {
  const auto j = parse_reply_json(body);
  if (!j.is_object()) fail(ErrorKind::Protocol, "embedding reply must be an object");
  const auto dim = positive_field(j, "dim");
  auto v = float_array(j, "vector");
  if (v.size() != dim) {
    fail(ErrorKind::Protocol, "embedding reply has " + std::to_string(v.size()) +
                                  " values for dim " + std::to_string(dim));
  }
  return v;
}

DenseFeature parse_dense_reply(std::string_view body) {
  const auto j = parse_reply_json(body);
  if (!j.is_object()) fail(ErrorKind::Protocol, "embedding reply must be an object");
  const auto h = positive_field(j, "h");
  const auto w = positive_field(j, "w");
  const auto dim = positive_field(j, "dim");
  auto data = float_array(j, "data");
  if (data.size() != h * w * dim) fail(ErrorKind::Protocol, "dense reply size does not match shape");
  try {
    return DenseFeature::normalized(static_cast<int>(h), static_cast<int>(w), dim, std::move(data));
  } catch (const Error& e) {
    fail(ErrorKind::Protocol, std::string("dense reply: ") + e.what());
  }
}

FileEmbeddingProvider::FileEmbeddingProvider(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir_, ec)) {
    fail(ErrorKind::Io, "embedding directory " + dir_.string() + " does not exist");
  }
}

std::filesystem::path FileEmbeddingProvider::view_path(const ViewKey& key,
                                                       std::string_view ext) const {
  auto base = dir_;
  if (key.item) base /= "item_" + std::to_string(*key.item);
  return base / ("view_" + std::to_string(key.view) + std::string(ext));
}

std::vector<float> FileEmbeddingProvider::embed_view(const DepthMap&, const ViewKey& key) {
  const auto path = view_path(key, ".emb1");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorKind::Lookup, "no precomputed global feature for view " + std::to_string(key.view) +
                                " (" + path.string() + ")");
  }
  const auto m = load_embedding_matrix(path);
  if (m.rows() != 1) fail(ErrorKind::Format, path.string() + ": view feature must have one row");
  return m.data();
}

DenseFeature FileEmbeddingProvider::embed_view_dense(const DepthMap&, const ViewKey& key) {
  const auto path = view_path(key, ".embd");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorKind::Lookup, "no precomputed dense feature for view " + std::to_string(key.view) +
                                " (" + path.string() + ")");
  }
  return load_dense_feature(path);
}

std::optional<EmbeddingMatrix> FileEmbeddingProvider::class_weights() {
  const auto path = dir_ / "text.emb1";
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  return load_embedding_matrix(path);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::chrono::seconds timeout)
    : timeout_(timeout) {
  auto parsed = detail::parse_http_url(url);
  origin_ = std::move(parsed.origin);
  path_ = std::move(parsed.path);
}

std::string HttpEmbeddingProvider::post(std::string_view mode, const std::string& body,
                                        const char* content_type) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  const auto sep = path_.find('?') == std::string::npos ? "?" : "&";
  const auto target = path_ + sep + "mode=" + std::string(mode);
  auto res = cli.Post(target, body, content_type);
  if (!res) {
    fail(ErrorKind::Transport, "embedding service " + origin_ + path_ +
                                   " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status == 501 || res->status == 405) {
    fail(ErrorKind::Capability, "embedding service does not support mode=" + std::string(mode));
  }
  if (res->status != 200) {
    fail(res->status >= 500 ? ErrorKind::Transport : ErrorKind::Protocol,
         "embedding service returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::vector<float> HttpEmbeddingProvider::embed_text(const std::string& text) {
  return parse_global_reply(post("text", text, "text/plain; charset=utf-8"));
}

std::vector<float> HttpEmbeddingProvider::embed_view(const DepthMap& map, const ViewKey&) {
  const auto ppm = encode_ppm(map);
  return parse_global_reply(post("global", std::string(ppm.begin(), ppm.end()), "image/x-portable-pixmap"));
}

DenseFeature HttpEmbeddingProvider::embed_view_dense(const DepthMap& map, const ViewKey&) {
  const auto ppm = encode_ppm(map);
  return parse_dense_reply(post("dense", std::string(ppm.begin(), ppm.end()), "image/x-portable-pixmap"));
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view locator) {
  if (locator.starts_with("file:")) {
    return std::make_unique<FileEmbeddingProvider>(std::string(locator.substr(5)));
  }
  if (locator.starts_with("http://")) return std::make_unique<HttpEmbeddingProvider>(std::string(locator));
  if (locator.starts_with("http:")) {
    return std::make_unique<HttpEmbeddingProvider>(std::string(locator.substr(5)));
  }
  fail(ErrorKind::Usage, "provider must be file:DIR or http:URL, got '" + std::string(locator) + "'");
}

EmbeddingMatrix encode_texts(const DescriptionSet& descriptions, EmbeddingProvider& provider) {
  if (descriptions.classes.empty()) fail(ErrorKind::Domain, "description set has no classes");
  std::size_t dim = 0;
  std::vector<float> weights;
  for (const auto& cls : descriptions.classes) {
    if (cls.descriptions.empty()) {
      fail(ErrorKind::Domain, "class '" + cls.class_name + "' has no descriptions");
    }
    std::vector<double> acc;
    for (const auto& d : cls.descriptions) {
      const auto raw = provider.embed_text(d.text);
      if (dim == 0) dim = raw.size();
      if (raw.size() != dim || dim == 0) {
        fail(ErrorKind::Protocol, "text embedding dimension changed from " + std::to_string(dim) +
                                      " to " + std::to_string(raw.size()));
      }
      const auto unit = l2_normalized(raw);
      acc.resize(dim, 0.0);
      for (std::size_t c = 0; c < dim; ++c) acc[c] += unit[c];
    }
    for (double x : acc) weights.push_back(static_cast<float>(x / cls.descriptions.size()));
  }
  return EmbeddingMatrix::from_rows(descriptions.classes.size(), dim, std::move(weights));
}

std::vector<ViewFeature> encode_depth_maps(const std::vector<DepthMap>& maps,
                                           EmbeddingProvider& provider,
                                           std::optional<std::size_t> item) {
  std::vector<ViewFeature> out;
  out.reserve(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto raw = provider.embed_view(maps[i], ViewKey{i, item});
    if (!out.empty() && raw.size() != out.front().dim()) {
      fail(ErrorKind::Protocol, "view embedding dimension differs at view " + std::to_string(i));
    }
    out.push_back(ViewFeature::normalized(raw));
  }
  return out;
}

std::vector<DenseFeature> encode_dense(const std::vector<DepthMap>& maps,
                                       EmbeddingProvider& provider, bool to_map_size,
                                       std::optional<std::size_t> item) {
  if (!provider.supports_dense()) fail(ErrorKind::Capability, "embedding provider has no dense mode");
  std::vector<DenseFeature> out;
  out.reserve(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    auto f = provider.embed_view_dense(maps[i], ViewKey{i, item});
    // Pixels are unit-normalised whatever the provider returned.
    f = DenseFeature::normalized(f.height, f.width, f.dim, std::move(f.data));
    if (!out.empty() && f.dim != out.front().dim) {
      fail(ErrorKind::Protocol, "dense embedding dimension differs at view " + std::to_string(i));
    }
    if (to_map_size && (f.height != maps[i].height || f.width != maps[i].width)) {
      f = f.upsampled(maps[i].height, maps[i].width);
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace pc2depth

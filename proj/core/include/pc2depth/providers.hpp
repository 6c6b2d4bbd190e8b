#pragma once

// Pluggable sources of text and view embeddings, and the gateway operations
// that turn their raw output into normalised features.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pc2depth/embedding.hpp"
#include "pc2depth/projection.hpp"
#include "pc2depth/prompt_engine.hpp"

namespace pc2depth {

/// Identifies one projected view. `item` distinguishes several objects
/// (e.g. detection crops) sharing one provider.
struct ViewKey {
  std::size_t view = 0;
  std::optional<std::size_t> item;
};

/// Providers must tolerate concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::vector<float> embed_text(const std::string& text);
  virtual std::vector<float> embed_view(const DepthMap& map, const ViewKey& key) = 0;
  virtual DenseFeature embed_view_dense(const DepthMap& map, const ViewKey& key);
  virtual bool supports_dense() const { return false; }

  /// Precomputed class weights, when the provider ships them.
  virtual std::optional<EmbeddingMatrix> class_weights() { return std::nullopt; }
};

/// Reads precomputed vectors from a directory:
///   view_{i}.emb1 (1 x C), view_{i}.embd, text.emb1,
/// and item_{b}/view_{i}.* for item-scoped keys.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(std::filesystem::path dir);

  std::vector<float> embed_view(const DepthMap& map, const ViewKey& key) override;
  DenseFeature embed_view_dense(const DepthMap& map, const ViewKey& key) override;
  bool supports_dense() const override { return true; }
  std::optional<EmbeddingMatrix> class_weights() override;

  std::filesystem::path view_path(const ViewKey& key, std::string_view ext) const;

 private:
  std::filesystem::path dir_;
};

/// POSTs PPM images (mode=global|dense) or UTF-8 text (mode=text) to a service.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(std::string url,
                                 std::chrono::seconds timeout = std::chrono::seconds(60));

  std::vector<float> embed_text(const std::string& text) override;
  std::vector<float> embed_view(const DepthMap& map, const ViewKey& key) override;
  DenseFeature embed_view_dense(const DepthMap& map, const ViewKey& key) override;
  bool supports_dense() const override { return true; }

 private:
  std::string post(std::string_view mode, const std::string& body, const char* content_type);

  std::string origin_;
  std::string path_;
  std::chrono::seconds timeout_;
};

/// Parses {"dim": C, "vector": [...]}.
std::vector<float> parse_global_reply(std::string_view body);
/// Parses {"h": H, "w": W, "dim": C, "data": [...]}, normalising pixels.
DenseFeature parse_dense_reply(std::string_view body);

/// "file:DIR" or "http:URL" (URL may itself start with http://).
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view locator);

/// Class weights: per class, the mean of unit description embeddings, renormalised.
EmbeddingMatrix encode_texts(const DescriptionSet& descriptions, EmbeddingProvider& provider);

/// One unit-norm feature per map, in order.
std::vector<ViewFeature> encode_depth_maps(const std::vector<DepthMap>& maps,
                                           EmbeddingProvider& provider,
                                           std::optional<std::size_t> item = std::nullopt);

/// Dense features per map; when `to_map_size` is set each grid is bilinearly
/// resized to its depth map's resolution.
std::vector<DenseFeature> encode_dense(const std::vector<DepthMap>& maps,
                                       EmbeddingProvider& provider, bool to_map_size = true,
                                       std::optional<std::size_t> item = std::nullopt);

}  // namespace pc2depth

#pragma once

// Embedding containers and their on-disk formats.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pc2depth {

/// Returns v / ||v||. Vectors already unit-length to float precision are
/// returned unchanged. Zero or non-finite input is a domain error.
std::vector<float> l2_normalized(std::span<const float> v);

/// K x C row-major matrix whose rows are unit vectors (class weights).
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  /// Validates the shape and normalises each row.
  static EmbeddingMatrix from_rows(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t k) const {
    return {data_.data() + k * dim_, dim_};
  }
  const std::vector<float>& data() const { return data_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

/// Global embedding of one view, unit length.
struct ViewFeature {
  std::vector<float> vector;

  static ViewFeature normalized(std::span<const float> v) { return {l2_normalized(v)}; }
  std::size_t dim() const { return vector.size(); }
};

/// H_f x W_f x C dense embedding of one view, channel innermost.
struct DenseFeature {
  int height = 0;
  int width = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  /// Validates the shape and unit-normalises each pixel vector.
  static DenseFeature normalized(int height, int width, std::size_t dim, std::vector<float> data);

  std::span<const float> at(int u, int v) const {
    return {data.data() + (static_cast<std::size_t>(u) * width + v) * dim, dim};
  }

  /// Bilinear resize with half-pixel centres (edge-clamped). Pixel vectors
  /// are interpolated component-wise and not renormalised.
  DenseFeature upsampled(int out_height, int out_width) const;
};

// "EMB1": u32 K, u32 C, K*C f32 row-major. Rows are normalised on load.
std::vector<std::uint8_t> encode_emb1(const EmbeddingMatrix& m);
EmbeddingMatrix decode_emb1(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
void save_embedding_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path);

// "EMBD": u32 H_f, u32 W_f, u32 C, payload f32. Pixels are normalised on load.
std::vector<std::uint8_t> encode_embd(const DenseFeature& f);
DenseFeature decode_embd(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
void save_dense_feature(const DenseFeature& f, const std::filesystem::path& path);
DenseFeature load_dense_feature(const std::filesystem::path& path);

}  // namespace pc2depth

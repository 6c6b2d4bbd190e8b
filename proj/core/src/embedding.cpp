#include "pc2depth/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

std::vector<float> l2_normalized(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::Domain, "embedding contains NaN or Inf");
    sq += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0)) fail(ErrorKind::Domain, "cannot normalise a zero embedding");
  std::vector<float> out(v.begin(), v.end());
  if (std::abs(norm - 1.0) <= 1e-7) return out;
  for (auto& x : out) x = static_cast<float>(x / norm);
  return out;
}

EmbeddingMatrix EmbeddingMatrix::from_rows(std::size_t rows, std::size_t dim,
                                           std::vector<float> data) {
  if (rows == 0 || dim == 0) fail(ErrorKind::Domain, "embedding matrix must be non-empty");
  if (data.size() != rows * dim) {
    fail(ErrorKind::Domain, "embedding payload size " + std::to_string(data.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(dim));
  }
  EmbeddingMatrix m;
  m.rows_ = rows;
  m.dim_ = dim;
  m.data_ = std::move(data);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto unit = l2_normalized(m.row(k));
    std::copy(unit.begin(), unit.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(k * dim));
  }
  return m;
}

DenseFeature DenseFeature::normalized(int height, int width, std::size_t dim,
                                      std::vector<float> data) {
  if (height <= 0 || width <= 0 || dim == 0) {
    fail(ErrorKind::Domain, "dense feature dimensions must be positive");
  }
  if (data.size() != static_cast<std::size_t>(height) * width * dim) {
    fail(ErrorKind::Domain, "dense feature payload size does not match its shape");
  }
  DenseFeature f{height, width, dim, std::move(data)};
  for (std::size_t px = 0; px < static_cast<std::size_t>(height) * width; ++px) {
    std::span<const float> v(f.data.data() + px * dim, dim);
    const auto unit = l2_normalized(v);
    std::copy(unit.begin(), unit.end(), f.data.begin() + static_cast<std::ptrdiff_t>(px * dim));
  }
  return f;
}

DenseFeature DenseFeature::upsampled(int out_height, int out_width) const {
  if (out_height <= 0 || out_width <= 0) fail(ErrorKind::Domain, "output size must be positive");
  DenseFeature out{out_height, out_width, dim, {}};
  out.data.resize(static_cast<std::size_t>(out_height) * out_width * dim);
  const double sy = static_cast<double>(height) / out_height;
  const double sx = static_cast<double>(width) / out_width;
  for (int u = 0; u < out_height; ++u) {
    const double fy = std::clamp((u + 0.5) * sy - 0.5, 0.0, height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, height - 1);
    const double ty = fy - y0;
    for (int v = 0; v < out_width; ++v) {
      const double fx = std::clamp((v + 0.5) * sx - 0.5, 0.0, width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, width - 1);
      const double tx = fx - x0;
      const auto a = at(y0, x0), b = at(y0, x1), c = at(y1, x0), d = at(y1, x1);
      float* dst = out.data.data() + (static_cast<std::size_t>(u) * out_width + v) * dim;
      for (std::size_t ch = 0; ch < dim; ++ch) {
        const double top = (1 - tx) * a[ch] + tx * b[ch];
        const double bot = (1 - tx) * c[ch] + tx * d[ch];
        dst[ch] = static_cast<float>((1 - ty) * top + ty * bot);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_emb1(const EmbeddingMatrix& m) {
  detail::ByteWriter w;
  w.magic("EMB1");
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  for (float x : m.data()) w.f32(x);
  return w.bytes();
}

EmbeddingMatrix decode_emb1(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("EMB1");
  const auto k = r.u32();
  const auto c = r.u32();
  if (k == 0 || c == 0) r.fail_at("empty shape " + std::to_string(k) + "x" + std::to_string(c));
  const std::size_t n = std::size_t{k} * c;
  if (r.remaining() != n * 4) r.fail_at("payload size does not match shape");
  std::vector<float> data(n);
  for (auto& x : data) x = r.f32();
  try {
    return EmbeddingMatrix::from_rows(k, c, std::move(data));
  } catch (const Error& e) {
    fail(ErrorKind::Format, source + ": " + e.what());
  }
}

void save_embedding_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_emb1(m));
}

EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path) {
  return decode_emb1(detail::read_file_bytes(path), path.string());
}

std::vector<std::uint8_t> encode_embd(const DenseFeature& f) {
  detail::ByteWriter w;
  w.magic("EMBD");
  w.u32(static_cast<std::uint32_t>(f.height));
  w.u32(static_cast<std::uint32_t>(f.width));
  w.u32(static_cast<std::uint32_t>(f.dim));
  for (float x : f.data) w.f32(x);
  return w.bytes();
}

DenseFeature decode_embd(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("EMBD");
  const auto h = r.u32();
  const auto w = r.u32();
  const auto c = r.u32();
  if (h == 0 || w == 0 || c == 0 || h > 65535 || w > 65535) r.fail_at("invalid dense shape");
  const std::size_t n = std::size_t{h} * w * c;
  if (r.remaining() != n * 4) r.fail_at("payload size does not match shape");
  std::vector<float> data(n);
  for (auto& x : data) x = r.f32();
  try {
    return DenseFeature::normalized(static_cast<int>(h), static_cast<int>(w), c, std::move(data));
  } catch (const Error& e) {
    fail(ErrorKind::Format, source + ": " + e.what());
  }
}

void save_dense_feature(const DenseFeature& f, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_embd(f));
}

DenseFeature load_dense_feature(const std::filesystem::path& path) {
  return decode_embd(detail::read_file_bytes(path), path.string());
}

}  // namespace pc2depth

#include "pc2depth/depth_export.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

std::uint8_t intensity_to_byte(float intensity) {
  const double v = std::clamp(static_cast<double>(intensity), 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

namespace {

std::vector<std::uint8_t> encode_pnm(const DepthMap& map, bool rgb) {
  const std::string header = std::string(rgb ? "P6" : "P5") + "\n" +
                             std::to_string(map.width) + " " + std::to_string(map.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + map.intensity.size() * (rgb ? 3 : 1));
  for (float i : map.intensity) {
    const auto b = intensity_to_byte(i);
    out.push_back(b);
    if (rgb) {
      out.push_back(b);
      out.push_back(b);
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const DepthMap& map) { return encode_pnm(map, false); }
std::vector<std::uint8_t> encode_ppm(const DepthMap& map) { return encode_pnm(map, true); }

std::vector<std::uint8_t> encode_dmap(const DepthMap& map) {
  detail::ByteWriter w;
  w.magic("DMAP");
  w.u32(static_cast<std::uint32_t>(map.height));
  w.u32(static_cast<std::uint32_t>(map.width));
  for (float d : map.depth) w.f32(d);
  for (auto b : map.background) w.u8(b ? 1 : 0);
  return w.bytes();
}

DepthMap decode_dmap(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("DMAP");
  DepthMap m;
  const auto h = r.u32();
  const auto w = r.u32();
  const std::size_t pixels = std::size_t{h} * w;
  if (h > 65535 || w > 65535 || r.remaining() != pixels * 5) {
    r.fail_at("payload size does not match header " + std::to_string(h) + "x" + std::to_string(w));
  }
  m.height = static_cast<int>(h);
  m.width = static_cast<int>(w);
  m.depth.resize(pixels);
  m.intensity.resize(pixels);
  m.background.resize(pixels);
  for (auto& d : m.depth) d = r.f32();
  for (std::size_t i = 0; i < pixels; ++i) {
    const auto b = r.u8();
    if (b > 1) r.fail_at("background mask byte must be 0 or 1");
    m.background[i] = b;
    m.intensity[i] = b ? 0.f : 1.f - m.depth[i];
  }
  return m;
}

std::vector<std::uint8_t> encode_prec(const ProjectionRecord& record) {
  detail::ByteWriter w;
  w.magic("PREC");
  w.u32(static_cast<std::uint32_t>(record.entries.size()));
  for (const auto& e : record.entries) {
    w.u16(e.u);
    w.u16(e.v);
    w.f32(e.z);
    w.u8(e.visible ? 1 : 0);
  }
  return w.bytes();
}

ProjectionRecord decode_prec(std::span<const std::uint8_t> bytes, int grid_height,
                             int grid_width, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("PREC");
  const auto n = r.u32();
  if (r.remaining() != std::size_t{n} * 9) r.fail_at("payload size does not match point count");
  ProjectionRecord rec{grid_height, grid_width, {}};
  rec.entries.resize(n);
  for (auto& e : rec.entries) {
    e.u = r.u16();
    e.v = r.u16();
    e.z = r.f32();
    const auto vis = r.u8();
    if (vis > 1) r.fail_at("visible flag must be 0 or 1");
    e.visible = vis != 0;
    if (e.u >= grid_height || e.v >= grid_width) r.fail_at("pixel index outside the grid");
  }
  return rec;
}

void save_pgm(const DepthMap& map, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_pgm(map));
}
void save_ppm(const DepthMap& map, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_ppm(map));
}
void save_dmap(const DepthMap& map, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_dmap(map));
}
DepthMap load_dmap(const std::filesystem::path& path) {
  return decode_dmap(detail::read_file_bytes(path), path.string());
}
void save_prec(const ProjectionRecord& record, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_prec(record));
}
ProjectionRecord load_prec(const std::filesystem::path& path, int grid_height, int grid_width) {
  return decode_prec(detail::read_file_bytes(path), grid_height, grid_width, path.string());
}

}  // namespace pc2depth

#include "pc2depth/pointcloud_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "binary_io.hpp"
#include "pc2depth/error.hpp"

namespace pc2depth {

namespace {

constexpr std::string_view kPcv2Magic = "PCV2";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

[[noreturn]] void line_error(const std::string& source, std::size_t line,
                             const std::string& what) {
  fail(ErrorKind::Format, source + ": line " + std::to_string(line) + ": " + what);
}

}  // namespace

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "ascii-xyz" || name == "xyz") return CloudFormat::AsciiXyz;
  if (name == "binary-pcv2" || name == "pcv2") return CloudFormat::BinaryPcv2;
  fail(ErrorKind::Usage, "unknown point cloud format '" + std::string(name) + "'");
}

std::string_view to_string(CloudFormat f) {
  return f == CloudFormat::AsciiXyz ? "ascii-xyz" : "binary-pcv2";
}

CloudFormat guess_cloud_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".pcv2" || ext == ".bin") ? CloudFormat::BinaryPcv2
                                           : CloudFormat::AsciiXyz;
}

PointCloud parse_ascii_xyz(std::string_view text, const std::string& source) {
  PointCloud pc;
  std::vector<std::int32_t> labels;
  std::optional<bool> labelled;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto tokens = split_ws(line);
    if (tokens.size() != 3 && tokens.size() != 4) {
      line_error(source, line_no,
                 "expected 3 or 4 columns, found " + std::to_string(tokens.size()));
    }
    Point3f p;
    float* dst[3] = {&p.x, &p.y, &p.z};
    for (int a = 0; a < 3; ++a) {
      if (!parse_number(tokens[a], *dst[a]) || !std::isfinite(*dst[a])) {
        line_error(source, line_no, "bad coordinate '" + std::string(tokens[a]) + "'");
      }
    }
    const bool has_label = tokens.size() == 4;
    if (labelled && *labelled != has_label) {
      line_error(source, line_no, "inconsistent label column");
    }
    labelled = has_label;
    if (has_label) {
      std::int32_t lab = 0;
      if (!parse_number(tokens[3], lab) || lab < 0) {
        line_error(source, line_no, "bad label '" + std::string(tokens[3]) + "'");
      }
      labels.push_back(lab);
    }
    pc.points.push_back(p);
  }
  if (labelled.value_or(false)) pc.labels = std::move(labels);
  return pc;
}

std::string format_ascii_xyz(const PointCloud& pc) {
  std::string out;
  out.reserve(pc.size() * 40);
  char buf[96];
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.points[i];
    int n = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g", static_cast<double>(p.x),
                          static_cast<double>(p.y), static_cast<double>(p.z));
    out.append(buf, static_cast<std::size_t>(n));
    if (pc.labels) {
      n = std::snprintf(buf, sizeof buf, " %d", (*pc.labels)[i]);
      out.append(buf, static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  return out;
}

PointCloud decode_pcv2(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader in(bytes, source);
  in.expect_magic(kPcv2Magic);
  const std::uint32_t count = in.u32();
  const std::uint8_t flag = in.u8();
  if (flag > 1) in.fail_at("label flag must be 0 or 1, got " + std::to_string(flag));

  const std::size_t want = std::size_t{count} * 12 + (flag ? std::size_t{count} * 2 : 0);
  if (in.remaining() < want) {
    in.fail_at("truncated payload: need " + std::to_string(want) + " bytes, have " +
               std::to_string(in.remaining()));
  }
  PointCloud pc;
  pc.points.resize(count);
  for (auto& p : pc.points) {
    const std::size_t at = in.offset();
    p.x = in.f32();
    p.y = in.f32();
    p.z = in.f32();
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      fail(ErrorKind::Format,
           source + ": non-finite coordinate at byte offset " + std::to_string(at));
    }
  }
  if (flag) {
    auto& labels = pc.labels.emplace(count);
    for (auto& l : labels) l = in.u16();
  }
  in.expect_end();
  return pc;
}

std::vector<std::uint8_t> encode_pcv2(const PointCloud& pc) {
  if (pc.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorKind::Domain, "point count exceeds the PCV2 u32 header");
  }
  detail::ByteWriter out;
  out.magic(kPcv2Magic);
  out.u32(static_cast<std::uint32_t>(pc.size()));
  out.u8(pc.labels ? 1 : 0);
  for (const auto& p : pc.points) {
    out.f32(p.x);
    out.f32(p.y);
    out.f32(p.z);
  }
  if (pc.labels) {
    for (auto l : *pc.labels) {
      if (l < 0 || l > std::numeric_limits<std::uint16_t>::max()) {
        fail(ErrorKind::Domain, "label " + std::to_string(l) + " does not fit in u16");
      }
      out.u16(static_cast<std::uint16_t>(l));
    }
  }
  return out.bytes();
}

PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  if (format == CloudFormat::AsciiXyz) {
    return parse_ascii_xyz(detail::read_file_text(path), path.string());
  }
  return decode_pcv2(detail::read_file_bytes(path), path.string());
}

void save_point_cloud(const PointCloud& pc, const std::filesystem::path& path,
                      CloudFormat format) {
  pc.validate();
  if (format == CloudFormat::AsciiXyz) {
    detail::write_file_text(path, format_ascii_xyz(pc));
  } else {
    detail::write_file_bytes(path, encode_pcv2(pc));
  }
}

std::vector<std::int32_t> load_label_sidecar(const std::filesystem::path& path) {
  const auto text = detail::read_file_text(path);
  std::vector<std::int32_t> labels;
  std::size_t pos = 0, line_no = 0;
  const std::string_view sv(text);
  while (pos < sv.size()) {
    auto nl = sv.find('\n', pos);
    if (nl == std::string_view::npos) nl = sv.size();
    const auto line = trim(sv.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::int32_t v = 0;
    if (!parse_number(line, v) || v < 0) {
      line_error(path.string(), line_no, "bad label '" + std::string(line) + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

void save_label_sidecar(std::span<const std::int32_t> labels,
                        const std::filesystem::path& path) {
  std::string out;
  for (auto l : labels) {
    out += std::to_string(l);
    out.push_back('\n');
  }
  detail::write_file_text(path, out);
}

PointCloud with_labels(PointCloud pc, std::vector<std::int32_t> labels) {
  if (labels.size() != pc.size()) {
    fail(ErrorKind::Format, "label sidecar has " + std::to_string(labels.size()) +
                                " rows for " + std::to_string(pc.size()) + " points");
  }
  pc.labels = std::move(labels);
  return pc;
}

}  // namespace pc2depth

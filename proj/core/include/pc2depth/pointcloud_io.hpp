#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pc2depth/point_cloud.hpp"

namespace pc2depth {

/// ascii-xyz: one "x y z [label]" row per line, '#' starts a comment line.
/// binary-pcv2: "PCV2", u32 count, u8 label flag, count*3 f32, [count u16 labels].
enum class CloudFormat { AsciiXyz, BinaryPcv2 };

CloudFormat parse_cloud_format(std::string_view name);
std::string_view to_string(CloudFormat f);

/// Picks binary-pcv2 for ".pcv2"/".bin" extensions, ascii-xyz otherwise.
CloudFormat guess_cloud_format(const std::filesystem::path& path);

PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format);
void save_point_cloud(const PointCloud& pc, const std::filesystem::path& path,
                      CloudFormat format);

// In-memory codecs used by the file functions; `source` names the input in errors.
PointCloud parse_ascii_xyz(std::string_view text, const std::string& source = "<memory>");
std::string format_ascii_xyz(const PointCloud& pc);
PointCloud decode_pcv2(std::span<const std::uint8_t> bytes,
                       const std::string& source = "<memory>");
std::vector<std::uint8_t> encode_pcv2(const PointCloud& pc);

/// One integer label per line, aligned with the rows of an ascii-xyz file.
std::vector<std::int32_t> load_label_sidecar(const std::filesystem::path& path);
void save_label_sidecar(std::span<const std::int32_t> labels,
                        const std::filesystem::path& path);

/// Attaches sidecar labels, checking the row count.
PointCloud with_labels(PointCloud pc, std::vector<std::int32_t> labels);

}  // namespace pc2depth

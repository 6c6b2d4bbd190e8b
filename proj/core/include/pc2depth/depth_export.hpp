#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pc2depth/projection.hpp"

namespace pc2depth {

/// 8-bit quantisation used for image export: round-half-up of intensity * 255.
std::uint8_t intensity_to_byte(float intensity);

/// Binary PGM ("P5"), one byte per pixel.
std::vector<std::uint8_t> encode_pgm(const DepthMap& map);
/// Binary PPM ("P6") with the intensity replicated across three channels.
std::vector<std::uint8_t> encode_ppm(const DepthMap& map);

/// "DMAP", u32 H, u32 W, H*W f32 depth, H*W u8 background mask.
std::vector<std::uint8_t> encode_dmap(const DepthMap& map);
DepthMap decode_dmap(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

/// "PREC", u32 N, per point: u16 u, u16 v, f32 z, u8 visible.
/// Grid dimensions are not stored; decoding leaves them at the caller-given values.
std::vector<std::uint8_t> encode_prec(const ProjectionRecord& record);
ProjectionRecord decode_prec(std::span<const std::uint8_t> bytes, int grid_height,
                             int grid_width, const std::string& source = "<memory>");

void save_pgm(const DepthMap& map, const std::filesystem::path& path);
void save_ppm(const DepthMap& map, const std::filesystem::path& path);
void save_dmap(const DepthMap& map, const std::filesystem::path& path);
DepthMap load_dmap(const std::filesystem::path& path);
void save_prec(const ProjectionRecord& record, const std::filesystem::path& path);
ProjectionRecord load_prec(const std::filesystem::path& path, int grid_height, int grid_width);

}  // namespace pc2depth

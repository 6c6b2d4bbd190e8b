#pragma once

// Little-endian encode/decode helpers shared by the binary file formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pc2depth::detail {

class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; every failure reports the byte offset it occurred at.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string source)
      : data_(data), source_(std::move(source)) {}

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const;

  [[noreturn]] void fail_at(const std::string& what) const;

 private:
  void need(std::size_t n, const char* what) const;

  std::span<const std::uint8_t> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, std::string_view text);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace pc2depth::detail

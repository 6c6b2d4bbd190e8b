#include "binary_io.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "pc2depth/error.hpp"

namespace pc2depth {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Protocol: return "protocol error";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::Capability: return "capability error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain:
    case ErrorKind::Usage: return 2;
    case ErrorKind::Format:
    case ErrorKind::Protocol: return 3;
    case ErrorKind::Transport: return 4;
    case ErrorKind::Capability: return 5;
    case ErrorKind::Lookup:
    case ErrorKind::Io: return 6;
  }
  return 1;
}

}  // namespace pc2depth

namespace pc2depth::detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

}  // namespace

void ByteWriter::magic(std::string_view tag) {
  buf_.insert(buf_.end(), tag.begin(), tag.end());
}
void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }
void ByteWriter::u16(std::uint16_t v) { put_le(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }

void ByteReader::fail_at(const std::string& what) const {
  fail(ErrorKind::Format,
       source_ + ": " + what + " at byte offset " + std::to_string(pos_));
}

void ByteReader::need(std::size_t n, const char* what) const {
  if (remaining() < n) {
    fail_at(std::string("truncated payload reading ") + what);
  }
}

void ByteReader::expect_magic(std::string_view tag) {
  need(tag.size(), "magic");
  if (std::memcmp(data_.data() + pos_, tag.data(), tag.size()) != 0) {
    fail_at("bad magic, expected \"" + std::string(tag) + "\"");
  }
  pos_ += tag.size();
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2, "u16");
  std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
  pos_ += 4;
  return v;
}

float ByteReader::f32() {
  need(4, "f32");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
  pos_ += 4;
  return std::bit_cast<float>(v);
}

void ByteReader::expect_end() const {
  if (remaining() != 0) fail_at("unexpected trailing bytes");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
         "." + std::to_string(counter.fetch_add(1));
  write_file_text(tmp, text);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot rename into " + path.string());
  }
}

}  // namespace pc2depth::detail

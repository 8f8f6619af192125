#pragma once

// Little-endian byte packing shared by the corpus, checkpoint and feature
// file formats.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "h2rat/errors.hpp"

namespace h2rat::binio {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

class Writer {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  // u32 length prefix followed by the raw bytes.
  void string(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  // CRC32 of everything from `from` to the current end.
  void crc_trailer(std::size_t from) { u32(crc32(bytes_.data() + from, bytes_.size() - from)); }

  std::size_t size() const { return bytes_.size(); }
  const Bytes& bytes() const { return bytes_; }

 private:
  Bytes bytes_;
};

// Bounds-checked cursor. Running past the end raises TruncatedError naming
// the file kind.
class Reader {
 public:
  Reader(const Bytes& bytes, std::string what, std::size_t begin = 0, std::size_t end = SIZE_MAX)
      : bytes_(bytes),
        what_(std::move(what)),
        pos_(begin),
        end_(end == SIZE_MAX ? bytes.size() : end) {}

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  double f32();
  std::string string();

  std::size_t position() const { return pos_; }
  bool at_end() const { return pos_ == end_; }

 private:
  void need(std::size_t n);

  const Bytes& bytes_;
  std::string what_;
  std::size_t pos_;
  std::size_t end_;
};

// Layout shared by corpus and checkpoint containers:
//   magic(4) | u32 version | body ... | u32 crc32(body)
// Checks magic and version, returns the body range [begin, end).
struct Container {
  std::size_t body_begin;
  std::size_t body_end;
  std::uint32_t stored_crc;
};
Container open_container(const Bytes& bytes, std::string_view magic, std::uint32_t version,
                         const std::string& what);
void verify_crc(const Bytes& bytes, const Container& c, const std::string& what);

// Runs parse() over a container and then checks its CRC. Truncation wins
// over a checksum mismatch, which wins over any other format defect, so a
// corrupted byte is reported as corruption rather than as whatever the
// parser tripped over.
template <typename Parse>
auto parse_checked(const Bytes& bytes, const Container& c, const std::string& what, Parse&& parse) {
  try {
    auto result = parse();
    verify_crc(bytes, c, what);
    return result;
  } catch (const TruncatedError&) {
    throw;
  } catch (const ChecksumError&) {
    throw;
  } catch (const FormatError&) {
    verify_crc(bytes, c, what);
    throw;
  }
}

}  // namespace h2rat::binio

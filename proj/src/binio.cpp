#include "binio.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

#include "h2rat/errors.hpp"

namespace h2rat::binio {

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void Reader::need(std::size_t n) {
  if (end_ - pos_ < n) {
    throw TruncatedError(what_ + " is truncated at byte " + std::to_string(pos_));
  }
}

void Reader::expect_magic(std::string_view tag) {
  need(tag.size());
  for (char ch : tag) {
    if (bytes_[pos_++] != static_cast<std::uint8_t>(ch)) {
      throw FormatError(what_ + ": bad magic bytes (expected \"" + std::string(tag) + "\")");
    }
  }
}

std::uint8_t Reader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

double Reader::f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

std::string Reader::string() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

Container open_container(const Bytes& bytes, std::string_view magic, std::uint32_t version,
                         const std::string& what) {
  if (bytes.size() < 8) throw TruncatedError(what + " is truncated (" + std::to_string(bytes.size()) + " bytes)");
  Reader head(bytes, what);
  head.expect_magic(magic);
  if (const auto v = head.u32(); v != version) {
    throw VersionError(what + " version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(version) + ")");
  }
  if (bytes.size() < 12) throw TruncatedError(what + " is truncated (no checksum)");
  Reader tail(bytes, what, bytes.size() - 4);
  return Container{8, bytes.size() - 4, tail.u32()};
}

void verify_crc(const Bytes& bytes, const Container& c, const std::string& what) {
  const auto actual = crc32(bytes.data() + c.body_begin, c.body_end - c.body_begin);
  if (actual != c.stored_crc) throw ChecksumError(what + ": CRC32 mismatch");
}

}  // namespace h2rat::binio

#pragma once

// Little-endian buffer serialization shared by the checkpoint and contextual
// containers. Files are desk-scale, so whole-buffer reads keep truncation
// reporting trivial: every short read names its byte offset.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "textclf/errors.hpp"

namespace textclf::binio {

inline void append_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void append_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void append_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  append_u64(buf, bits);
}

inline std::uint64_t fnv1a64(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;
  std::string name;  // file path, for error messages

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw DataError(name + ": truncated at offset " + std::to_string(pos) + " (need " +
                      std::to_string(n) + " bytes, " + std::to_string(buf.size() - pos) +
                      " left)");
  }

  std::uint32_t read_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }

  std::uint64_t read_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }

  double read_f64() {
    std::uint64_t bits = read_u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string read_bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

// Write through a sibling temp file and rename, so readers never observe a
// half-written file.
inline void write_file_atomic(const std::string& path, const std::string& buf) {
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

}  // namespace textclf::binio

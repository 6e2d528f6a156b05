// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary readers/writers shared by all artifact formats.
// Values are serialized byte-by-byte so files are identical on any host.

#ifndef TENSORCHART_BINIO_HPP
#define TENSORCHART_BINIO_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "tensorchart/errors.hpp"

namespace tensorchart {

inline std::ofstream open_output(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_input(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

inline void write_bytes(std::ostream &out, const void *p, std::size_t n) {
  out.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
}

inline void write_u8(std::ostream &out, std::uint8_t v) { write_bytes(out, &v, 1); }

inline void write_u16(std::ostream &out, std::uint16_t v) {
  const std::uint8_t b[2] = {std::uint8_t(v & 0xFF), std::uint8_t(v >> 8)};
  write_bytes(out, b, 2);
}

inline void write_u32(std::ostream &out, std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = std::uint8_t((v >> (8 * i)) & 0xFF);
  write_bytes(out, b, 4);
}

inline void write_u64(std::ostream &out, std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = std::uint8_t((v >> (8 * i)) & 0xFF);
  write_bytes(out, b, 8);
}

inline void write_f64(std::ostream &out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline void read_bytes(std::istream &in, void *p, std::size_t n, const char *what) {
  in.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CorruptArtifactError(std::string("truncated while reading ") + what +
                               " at offset " + std::to_string(std::streamoff(in.tellg())));
  }
}

inline std::uint8_t read_u8(std::istream &in, const char *what = "u8") {
  std::uint8_t v;
  read_bytes(in, &v, 1, what);
  return v;
}

inline std::uint16_t read_u16(std::istream &in, const char *what = "u16") {
  std::uint8_t b[2];
  read_bytes(in, b, 2, what);
  return std::uint16_t(b[0] | (std::uint16_t(b[1]) << 8));
}

inline std::uint32_t read_u32(std::istream &in, const char *what = "u32") {
  std::uint8_t b[4];
  read_bytes(in, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t read_u64(std::istream &in, const char *what = "u64") {
  std::uint8_t b[8];
  read_bytes(in, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double read_f64(std::istream &in, const char *what = "f64") {
  const std::uint64_t bits = read_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void write_magic(std::ostream &out, const char magic[4]) {
  write_bytes(out, magic, 4);
}

inline void expect_magic(std::istream &in, const char magic[4], const std::string &path) {
  char got[4] = {0, 0, 0, 0};
  read_bytes(in, got, 4, "magic");
  if (std::memcmp(got, magic, 4) != 0) {
    throw CorruptArtifactError("bad magic in " + path + ": expected " +
                               std::string(magic, 4) + ", found " + std::string(got, 4));
  }
}

// FNV-1a, used for config digests and artifact fingerprints in logs.
inline std::uint64_t fnv1a(const void *p, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto *bytes = static_cast<const std::uint8_t *>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string &s) { return fnv1a(s.data(), s.size()); }

}  // namespace tensorchart

#endif

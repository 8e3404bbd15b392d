#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

// Little-endian binary I/O helpers shared by the on-disk formats
// (.gsa/.ebwt/.lcp triplet files and cluster files).

namespace ebwtpc::binio {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("binio: truncated stream while reading u64");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("binio: truncated stream while reading u32");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

// 8-byte magic written/verified at the start of every binary file.
inline void put_magic(std::ostream& os, const char magic[8]) { os.write(magic, 8); }

inline void check_magic(std::istream& is, const char magic[8], const std::string& what) {
  char got[8];
  is.read(got, 8);
  if (!is || std::memcmp(got, magic, 8) != 0)
    throw std::runtime_error("bad magic in " + what + " (wrong or corrupt file)");
}

}  // namespace ebwtpc::binio

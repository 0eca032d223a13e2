#pragma once

// FMAP tensor dump format, little-endian:
//   offset 0   "FMAP"
//   offset 4   u32 version (= 1)
//   offset 8   u32 H
//   offset 12  u32 W
//   offset 16  u32 C
//   offset 20  u8  role {0 heatmap, 1 embedding, 2 offset, 3 generic}
//   offset 21  H*W*C float32, row-major (row, col, channel)

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "det3d/core.hpp"
#include "det3d/error.hpp"
#include "det3d/io.hpp"

namespace det3d::fmap {

inline constexpr char kMagic[4] = {'F', 'M', 'A', 'P'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 21;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const FeatureMap& map) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (map.height() > kMax || map.width() > kMax || map.channels() > kMax) {
    throw ConfigError("fmap: dimension exceeds u32 range");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * map.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  detail::put_u32(out, kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(map.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(map.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(map.channels()));
  out.push_back(static_cast<std::uint8_t>(map.role()));
  for (float v : map.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline FeatureMap decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw ParseError("fmap: truncated header (" + std::to_string(bytes.size()) + " of " +
                         std::to_string(kHeaderSize) + " bytes) at offset " +
                         std::to_string(bytes.size()),
                     std::nullopt, bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("fmap: bad magic at offset 0", std::nullopt, 0);
  }
  const std::uint32_t version = detail::get_u32(bytes.data() + 4);
  if (version != kVersion) {
    throw ParseError("fmap: unsupported version " + std::to_string(version) + " at offset 4",
                     std::nullopt, 4);
  }
  const std::uint32_t h = detail::get_u32(bytes.data() + 8);
  const std::uint32_t w = detail::get_u32(bytes.data() + 12);
  const std::uint32_t c = detail::get_u32(bytes.data() + 16);
  if (h == 0) throw ParseError("fmap: zero height at offset 8", std::nullopt, 8);
  if (w == 0) throw ParseError("fmap: zero width at offset 12", std::nullopt, 12);
  if (c == 0) throw ParseError("fmap: zero channel count at offset 16", std::nullopt, 16);
  const std::uint8_t role = bytes[20];
  if (role > 3) {
    throw ParseError("fmap: unknown role tag " + std::to_string(role) + " at offset 20",
                     std::nullopt, 20);
  }
  const std::uint64_t count = std::uint64_t{h} * w * c;
  const std::uint64_t expected = kHeaderSize + 4 * count;
  if (bytes.size() != expected) {
    const std::size_t at = std::min<std::uint64_t>(bytes.size(), expected);
    throw ParseError("fmap: payload length mismatch, expected " + std::to_string(expected) +
                         " bytes, got " + std::to_string(bytes.size()) + " (offset " +
                         std::to_string(at) + ")",
                     std::nullopt, at);
  }
  std::vector<float> data(count);
  const std::uint8_t* p = bytes.data() + kHeaderSize;
  for (std::uint64_t i = 0; i < count; ++i, p += 4) {
    data[i] = std::bit_cast<float>(detail::get_u32(p));
  }
  try {
    return FeatureMap(h, w, c, std::move(data), static_cast<MapRole>(role));
  } catch (const DomainError& e) {
    throw ParseError(std::string("fmap: ") + e.what(), std::nullopt, kHeaderSize);
  }
}

inline void write_file(const std::filesystem::path& path, const FeatureMap& map) {
  io::write_atomic(path, encode(map));
}

inline FeatureMap read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.offset());
  }
}

}  // namespace det3d::fmap

#pragma once

// Embedding sidecar ("MFEB"): a 16-byte header followed by a dense row-major
// float32 matrix, everything little-endian.
//
//   offset  size  field
//   0       4     magic "MFEB"
//   4       4     version (u32, currently 1)
//   8       4     dim     (u32)
//   12      4     count   (u32)
//   16      4*dim*count   rows

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "prodmatch/core/error.hpp"

namespace prodmatch {

inline constexpr char kEmbeddingMagic[4] = {'M', 'F', 'E', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }
inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

}  // namespace detail

/// Dense matrix of embeddings as stored in a sidecar file.
struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::vector<float> values;  // count * dim

  std::size_t count() const { return dim ? values.size() / dim : 0; }

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

  std::vector<double> row_as_double(std::size_t i) const {
    const auto r = row(i);
    return {r.begin(), r.end()};
  }

  void append(std::span<const double> row_values) {
    if (dim == 0 && values.empty()) dim = static_cast<std::uint32_t>(row_values.size());
    if (row_values.size() != dim)
      throw DimensionError("embedding table row", dim, row_values.size());
    for (double v : row_values) values.push_back(static_cast<float>(v));
  }
};

inline void write_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kEmbeddingMagic, 4);
  detail::put_u32(os, kEmbeddingVersion);
  detail::put_u32(os, table.dim);
  detail::put_u32(os, static_cast<std::uint32_t>(table.count()));
  for (float f : table.values) detail::put_f32(os, f);
  if (!os) throw Error("write failed: " + path.string());
}

inline EmbeddingTable read_embedding_table(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open embedding file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0)
    throw FormatError(path.string(), 0, "not an MFEB embedding file");
  const auto version = detail::get_u32(bytes.data() + 4);
  if (version != kEmbeddingVersion)
    throw FormatError(path.string(), 0, "unsupported MFEB version " + std::to_string(version));
  EmbeddingTable table;
  table.dim = detail::get_u32(bytes.data() + 8);
  const auto count = detail::get_u32(bytes.data() + 12);
  const std::size_t expected = 16 + std::size_t{4} * table.dim * count;
  if (bytes.size() != expected)
    throw FormatError(path.string(), 0,
                      "size " + std::to_string(bytes.size()) + " does not match header (" +
                          std::to_string(expected) + " bytes)");
  table.values.resize(std::size_t{table.dim} * count);
  for (std::size_t i = 0; i < table.values.size(); ++i)
    table.values[i] = std::bit_cast<float>(detail::get_u32(bytes.data() + 16 + 4 * i));
  return table;
}

}  // namespace prodmatch

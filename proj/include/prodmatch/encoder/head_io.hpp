#pragma once

// Projection head file ("MFPH"), little-endian:
//
//   offset  size  field
//   0       4     magic "MFPH"
//   4       4     version        u32 (1)
//   8       4     image_dim      u32
//   12      4     text_dim       u32
//   16      4     input_dim      u32
//   20      4     output_dim     u32
//   24      4     layer_count    u32 (1 = linear, 2 = one hidden ReLU layer)
//   28      4     hidden_dim     u32 (0 when layer_count = 1)
//   32      4     modality_mask  u32 (bit0 image, bit1 text, bit2 numerical)
//   36      ...   f64 values: W1 (rows x input_dim, row-major), b1,
//                 [W2 (output_dim x hidden_dim), b2],
//                 feature mean[3], feature stddev[3]

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "prodmatch/domain/embedding_file.hpp"
#include "prodmatch/encoder/projection_head.hpp"

namespace prodmatch {

inline constexpr char kHeadMagic[4] = {'M', 'F', 'P', 'H'};
inline constexpr std::uint32_t kHeadVersion = 1;

inline void save_head(const std::filesystem::path& path, const ProjectionHead& head) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const FusionLayout& l = head.layout();
  os.write(kHeadMagic, 4);
  detail::put_u32(os, kHeadVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(l.image_dim));
  detail::put_u32(os, static_cast<std::uint32_t>(l.text_dim));
  detail::put_u32(os, static_cast<std::uint32_t>(head.input_dim()));
  detail::put_u32(os, static_cast<std::uint32_t>(head.output_dim()));
  detail::put_u32(os, static_cast<std::uint32_t>(head.layer_count()));
  detail::put_u32(os, static_cast<std::uint32_t>(head.hidden_dim()));
  detail::put_u32(os, l.mask.bits());
  auto put_all = [&](const double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) detail::put_f64(os, p[i]);
  };
  put_all(head.w1().data(), head.w1().size());
  put_all(head.b1().data(), head.b1().size());
  if (head.has_hidden_layer()) {
    put_all(head.w2().data(), head.w2().size());
    put_all(head.b2().data(), head.b2().size());
  }
  for (double m : l.stats.mean) detail::put_f64(os, m);
  for (double s : l.stats.stddev) detail::put_f64(os, s);
  if (!os) throw Error("write failed: " + path.string());
}

inline ProjectionHead load_head(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open head file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::string src = path.string();
  if (bytes.size() < 36 || std::memcmp(bytes.data(), kHeadMagic, 4) != 0)
    throw FormatError(src, 0, "not an MFPH head file");
  const auto u32 = [&](std::size_t off) { return detail::get_u32(bytes.data() + off); };
  if (u32(4) != kHeadVersion) throw FormatError(src, 0, "unsupported MFPH version " + std::to_string(u32(4)));
  FusionLayout layout;
  layout.image_dim = u32(8);
  layout.text_dim = u32(12);
  const std::size_t d_in = u32(16);
  const std::size_t d_out = u32(20);
  const std::size_t layers = u32(24);
  const std::size_t hidden = u32(28);
  layout.mask = ModalityMask::from_bits(u32(32));
  if (layout.input_dim() != d_in) throw FormatError(src, 0, "input_dim inconsistent with modality mask");
  if (layers != 1 && layers != 2) throw FormatError(src, 0, "layer_count must be 1 or 2");
  if ((layers == 2) != (hidden > 0)) throw FormatError(src, 0, "hidden_dim inconsistent with layer_count");
  const std::size_t first_out = layers == 2 ? hidden : d_out;
  std::size_t n_values = first_out * d_in + first_out + 2 * kNumericalDim;
  if (layers == 2) n_values += d_out * hidden + d_out;
  if (bytes.size() != 36 + 8 * n_values)
    throw FormatError(src, 0, "file size does not match header (" + std::to_string(36 + 8 * n_values) + " bytes expected)");

  std::size_t cursor = 36;
  auto next = [&] {
    const double v = std::bit_cast<double>(detail::get_u64(bytes.data() + cursor));
    cursor += 8;
    return v;
  };
  auto read_matrix = [&](std::size_t rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = next();
    return m;
  };
  auto read_vector = [&](std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = next();
    return v;
  };
  Matrix w1 = read_matrix(first_out, d_in);
  Vector b1 = read_vector(first_out);
  Matrix w2;
  Vector b2;
  if (layers == 2) {
    w2 = read_matrix(d_out, hidden);
    b2 = read_vector(d_out);
  }
  for (double& m : layout.stats.mean) m = next();
  for (double& s : layout.stats.stddev) s = next();
  return ProjectionHead::from_parameters(layout, std::move(w1), std::move(b1), std::move(w2), std::move(b2));
}

}  // namespace prodmatch

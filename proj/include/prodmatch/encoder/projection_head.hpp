#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/linalg.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/domain/features.hpp"

namespace prodmatch {

/// Which modalities enter the fused vector.
struct ModalityMask {
  bool image = true;
  bool text = true;
  bool numerical = true;

  std::uint32_t bits() const { return (image ? 1u : 0u) | (text ? 2u : 0u) | (numerical ? 4u : 0u); }

  static ModalityMask from_bits(std::uint32_t b) { return {(b & 1u) != 0, (b & 2u) != 0, (b & 4u) != 0}; }

  static ModalityMask image_only() { return {true, false, false}; }
  static ModalityMask text_only() { return {false, true, false}; }

  bool any() const { return image || text || numerical; }
  bool operator==(const ModalityMask&) const = default;
};

/// Shape of the fused input: [pooled image | text | standardized numerical],
/// masked segments omitted.
struct FusionLayout {
  std::size_t image_dim = 0;
  std::size_t text_dim = 0;
  ModalityMask mask;
  FeatureStats stats;

  std::size_t input_dim() const {
    return (mask.image ? image_dim : 0) + (mask.text ? text_dim : 0) + (mask.numerical ? kNumericalDim : 0);
  }

  bool operator==(const FusionLayout&) const = default;
};

inline constexpr std::size_t kDefaultOutputDim = 192;
inline constexpr std::size_t kHiddenWidth = 256;

/// Trainable map from the fused feature space to the unit sphere in
/// `output_dim` dimensions: Linear, or Linear-ReLU-Linear with 256 hidden units.
class ProjectionHead {
 public:
  ProjectionHead() = default;

  /// Fan-in uniform init: weights and biases in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static ProjectionHead create(FusionLayout layout, std::size_t output_dim, bool hidden_layer, std::uint64_t seed) {
    if (output_dim < 1) throw ConfigError("output_dim must be >= 1");
    if (!layout.mask.any()) throw ConfigError("modality mask selects no input");
    ProjectionHead h;
    h.layout_ = std::move(layout);
    h.output_dim_ = output_dim;
    h.hidden_dim_ = hidden_layer ? kHiddenWidth : 0;
    const std::size_t d_in = h.layout_.input_dim();
    Rng rng(seed);
    const std::size_t first_out = hidden_layer ? kHiddenWidth : output_dim;
    init_uniform(h.w1_, h.b1_, first_out, d_in, rng);
    if (hidden_layer) init_uniform(h.w2_, h.b2_, output_dim, kHiddenWidth, rng);
    return h;
  }

  /// Assemble from explicit parameters (used by persistence and tests).
  static ProjectionHead from_parameters(FusionLayout layout, Matrix w1, Vector b1, Matrix w2 = {}, Vector b2 = {}) {
    ProjectionHead h;
    h.layout_ = std::move(layout);
    const auto d_in = static_cast<Eigen::Index>(h.layout_.input_dim());
    if (w1.cols() != d_in) throw DimensionError("first layer input", static_cast<std::size_t>(d_in), w1.cols());
    if (b1.size() != w1.rows()) throw DimensionError("first layer bias", w1.rows(), b1.size());
    if (w2.size() > 0) {
      if (w2.cols() != w1.rows()) throw DimensionError("second layer input", w1.rows(), w2.cols());
      if (b2.size() != w2.rows()) throw DimensionError("second layer bias", w2.rows(), b2.size());
      h.hidden_dim_ = static_cast<std::size_t>(w1.rows());
      h.output_dim_ = static_cast<std::size_t>(w2.rows());
    } else {
      h.output_dim_ = static_cast<std::size_t>(w1.rows());
    }
    if (h.output_dim_ < 1) throw ConfigError("output_dim must be >= 1");
    h.w1_ = std::move(w1);
    h.b1_ = std::move(b1);
    h.w2_ = std::move(w2);
    h.b2_ = std::move(b2);
    return h;
  }

  const FusionLayout& layout() const { return layout_; }
  std::size_t input_dim() const { return layout_.input_dim(); }
  std::size_t output_dim() const { return output_dim_; }
  bool has_hidden_layer() const { return hidden_dim_ > 0; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t layer_count() const { return has_hidden_layer() ? 2 : 1; }

  void set_feature_stats(const FeatureStats& stats) { layout_.stats = stats; }

  const Matrix& w1() const { return w1_; }
  const Vector& b1() const { return b1_; }
  const Matrix& w2() const { return w2_; }
  const Vector& b2() const { return b2_; }
  Matrix& w1() { return w1_; }
  Vector& b1() { return b1_; }
  Matrix& w2() { return w2_; }
  Vector& b2() { return b2_; }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
  }

  /// Mutable views of every parameter block, in a fixed order.
  std::vector<std::span<double>> parameter_blocks() {
    std::vector<std::span<double>> blocks{{w1_.data(), static_cast<std::size_t>(w1_.size())},
                                          {b1_.data(), static_cast<std::size_t>(b1_.size())}};
    if (has_hidden_layer()) {
      blocks.emplace_back(w2_.data(), static_cast<std::size_t>(w2_.size()));
      blocks.emplace_back(b2_.data(), static_cast<std::size_t>(b2_.size()));
    }
    return blocks;
  }

  /// Pre-normalization outputs for a batch of fused rows (N x d_in).
  Matrix forward_raw(const Matrix& inputs) const {
    check_input(inputs.cols());
    Matrix a1 = inputs * w1_.transpose();
    a1.rowwise() += b1_.transpose();
    if (!has_hidden_layer()) return a1;
    Matrix z = a1.cwiseMax(0.0) * w2_.transpose();
    z.rowwise() += b2_.transpose();
    return z;
  }

  void check_input(Eigen::Index cols) const {
    if (static_cast<std::size_t>(cols) != input_dim())
      throw DimensionError("projection head input", input_dim(), static_cast<std::size_t>(cols));
  }

  bool operator==(const ProjectionHead& o) const {
    return layout_ == o.layout_ && output_dim_ == o.output_dim_ && hidden_dim_ == o.hidden_dim_ &&
           w1_ == o.w1_ && b1_ == o.b1_ && w2_ == o.w2_ && b2_ == o.b2_;
  }

 private:
  static void init_uniform(Matrix& w, Vector& b, std::size_t rows, std::size_t cols, Rng& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(cols));
    w.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
    b.resize(static_cast<Eigen::Index>(rows));
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-a, a);
  }

  FusionLayout layout_;
  std::size_t output_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  Matrix w1_;
  Vector b1_;
  Matrix w2_;
  Vector b2_;
};

}  // namespace prodmatch

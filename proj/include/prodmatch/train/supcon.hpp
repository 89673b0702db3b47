#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/linalg.hpp"
#include "prodmatch/encoder/projection_head.hpp"

namespace prodmatch {

/// Unit embeddings of a mini-batch with their product labels. P(i) is every
/// other member carrying the same label.
struct EmbeddingBatch {
  Matrix embeddings;
  std::vector<std::int64_t> labels;
};

/// Fused inputs of a mini-batch (rows) with their product labels.
struct InputBatch {
  Matrix inputs;
  std::vector<std::int64_t> labels;
};

struct SupConOptions {
  /// Drop members without a positive from every denominator.
  bool exclude_lone_from_denominator = false;
  /// Rows of the similarity matrix materialized at once.
  std::size_t tile_rows = 256;
};

struct SupConValue {
  double loss = 0.0;
  std::size_t anchors = 0;  // members with |P(i)| > 0
  Matrix embedding_gradient;  // dL/dV, empty unless requested
};

namespace detail {

inline std::vector<std::size_t> positive_counts(std::span<const std::int64_t> labels) {
  std::unordered_map<std::int64_t, std::size_t> count;
  for (auto l : labels) ++count[l];
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = count[labels[i]] - 1;
  return out;
}

/// Rows [r0, r0 + rows) of V V^T. Each entry accumulates over the embedding
/// dimension in a fixed order, so its value does not depend on the batch
/// shape (a blocked GEMM gives no such guarantee). Vectorizes across columns.
inline Matrix similarity_rows(const Matrix& v, const Matrix& vt, std::size_t r0, std::size_t rows) {
  const Eigen::Index n = v.rows(), d = v.cols();
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(rows), n);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(rows); ++r) {
    double* out = s.row(r).data();
    for (Eigen::Index c = 0; c < d; ++c) {
      const double a = v(static_cast<Eigen::Index>(r0) + r, c);
      const double* col = vt.row(c).data();
      for (Eigen::Index k = 0; k < n; ++k) out[k] += a * col[k];
    }
  }
  return s;
}

/// Contrastive loss summed over anchors; optionally dL/dV. Similarities are
/// computed in row tiles so memory stays at tile_rows x B.
inline SupConValue supcon_core(const Matrix& v, std::span<const std::int64_t> labels, double tau,
                               const SupConOptions& options, bool want_gradient) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  const auto n = static_cast<std::size_t>(v.rows());
  if (labels.size() != n) throw DimensionError("batch labels", n, labels.size());
  const std::vector<std::size_t> positives = positive_counts(labels);
  std::vector<char> excluded(n, 0);
  std::size_t anchors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (positives[i] > 0) ++anchors;
    excluded[i] = options.exclude_lone_from_denominator && positives[i] == 0;
  }
  if (anchors == 0) throw DomainError("contrastive loss undefined: batch has no positive pair");

  SupConValue out;
  out.anchors = anchors;
  if (want_gradient) out.embedding_gradient = Matrix::Zero(v.rows(), v.cols());
  const std::size_t tile = std::max<std::size_t>(options.tile_rows, 1);
  std::vector<double> shifted(n);
  const Matrix vt = v.transpose();
  for (std::size_t r0 = 0; r0 < n; r0 += tile) {
    const std::size_t rows = std::min(tile, n - r0);
    const Matrix s = similarity_rows(v, vt, r0, rows);
    Matrix coeff;
    if (want_gradient) coeff = Matrix::Zero(static_cast<Eigen::Index>(rows), v.rows());
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r0 + r;
      if (positives[i] == 0) continue;
      const auto ri = static_cast<Eigen::Index>(r);
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || excluded[k]) continue;
        max_logit = std::max(max_logit, s(ri, static_cast<Eigen::Index>(k)) / tau);
      }
      double denom = 0.0;
      double positive_logits = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || excluded[k]) continue;
        const double logit = s(ri, static_cast<Eigen::Index>(k)) / tau;
        shifted[k] = std::exp(logit - max_logit);
        denom += shifted[k];
        if (labels[k] == labels[i]) positive_logits += logit;
      }
      const double inv_p = 1.0 / static_cast<double>(positives[i]);
      out.loss += max_logit + std::log(denom) - positive_logits * inv_p;
      if (want_gradient) {
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i || excluded[k]) continue;
          coeff(ri, static_cast<Eigen::Index>(k)) = shifted[k] / denom - (labels[k] == labels[i] ? inv_p : 0.0);
        }
      }
    }
    if (want_gradient) {
      const auto block = v.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(rows));
      out.embedding_gradient.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(rows)).noalias() +=
          coeff * v;
      out.embedding_gradient.noalias() += coeff.transpose() * block;
    }
  }
  if (want_gradient) out.embedding_gradient /= tau;
  return out;
}

}  // namespace detail

/// Supervised contrastive loss over a batch of unit embeddings:
///   L = sum_{i: |P(i)|>0} -1/|P(i)| sum_{j in P(i)} log( exp(v_i.v_j/tau) / sum_{k != i} exp(v_i.v_k/tau) )
/// Members without positives only appear in denominators.
inline double supcon_loss(const EmbeddingBatch& batch, double tau, const SupConOptions& options = {}) {
  return detail::supcon_core(batch.embeddings, batch.labels, tau, options, false).loss;
}

/// Gradient of the loss with respect to every head parameter, with the same
/// block layout as ProjectionHead::parameter_blocks().
struct HeadGradient {
  double loss = 0.0;
  std::size_t anchors = 0;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  std::vector<std::span<const double>> blocks() const {
    std::vector<std::span<const double>> out{{w1.data(), static_cast<std::size_t>(w1.size())},
                                             {b1.data(), static_cast<std::size_t>(b1.size())}};
    if (w2.size() > 0) {
      out.emplace_back(w2.data(), static_cast<std::size_t>(w2.size()));
      out.emplace_back(b2.data(), static_cast<std::size_t>(b2.size()));
    }
    return out;
  }

  double norm() const { return std::sqrt(w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2.squaredNorm()); }

  void scale(double f) {
    w1 *= f;
    b1 *= f;
    w2 *= f;
    b2 *= f;
  }
};

/// Loss and exact gradient of supcon_loss(normalize(head(inputs))), back-propagated
/// through the L2 normalization and the affine (or affine-ReLU-affine) head.
inline HeadGradient supcon_gradient(const InputBatch& batch, const ProjectionHead& head, double tau,
                                    const SupConOptions& options = {}) {
  head.check_input(batch.inputs.cols());
  const Matrix& x = batch.inputs;
  Matrix a1 = x * head.w1().transpose();
  a1.rowwise() += head.b1().transpose();
  Matrix hidden;
  Matrix z;
  if (head.has_hidden_layer()) {
    hidden = a1.cwiseMax(0.0);
    z = hidden * head.w2().transpose();
    z.rowwise() += head.b2().transpose();
  } else {
    z = a1;
  }
  const Vector norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) throw DomainError("degenerate projection in batch");
  const Matrix v = norms.cwiseInverse().asDiagonal() * z;

  SupConValue value = detail::supcon_core(v, batch.labels, tau, options, true);
  const Matrix& g = value.embedding_gradient;
  // d/dz of z/|z|: (g - (g.v) v) / |z|
  const Vector radial = (g.cwiseProduct(v)).rowwise().sum();
  const Matrix dz = norms.cwiseInverse().asDiagonal() * (g - radial.asDiagonal() * v);

  HeadGradient out;
  out.loss = value.loss;
  out.anchors = value.anchors;
  if (head.has_hidden_layer()) {
    out.w2 = dz.transpose() * hidden;
    out.b2 = dz.colwise().sum().transpose();
    Matrix dh = dz * head.w2();
    dh = dh.cwiseProduct((a1.array() > 0.0).cast<double>().matrix());
    out.w1 = dh.transpose() * x;
    out.b1 = dh.colwise().sum().transpose();
  } else {
    out.w1 = dz.transpose() * x;
    out.b1 = dz.colwise().sum().transpose();
  }
  return out;
}

}  // namespace prodmatch

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/linalg.hpp"
#include "prodmatch/domain/corpus.hpp"
#include "prodmatch/encoder/projection_head.hpp"

namespace prodmatch {

/// Componentwise mean of an offer's image embeddings.
inline std::vector<double> pool_images(std::span<const std::vector<double>> image_embeddings) {
  if (image_embeddings.empty()) throw DomainError("cannot pool an empty image set");
  const std::size_t d = image_embeddings.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& v : image_embeddings) {
    if (v.size() != d) throw DimensionError("image embedding", d, v.size());
    for (std::size_t i = 0; i < d; ++i) mean[i] += v[i];
  }
  const double n = static_cast<double>(image_embeddings.size());
  for (double& x : mean) x /= n;
  return mean;
}

/// Concatenate the active modalities of one offer.
inline Vector fuse(const Offer& offer, const FusionLayout& layout) {
  Vector out(static_cast<Eigen::Index>(layout.input_dim()));
  Eigen::Index at = 0;
  if (layout.mask.image) {
    const std::vector<double> pooled = pool_images(offer.image_embeddings);
    if (pooled.size() != layout.image_dim)
      throw DimensionError("image embedding of offer " + offer.key().str(), layout.image_dim, pooled.size());
    for (double x : pooled) out[at++] = x;
  }
  if (layout.mask.text) {
    if (offer.text_embedding.size() != layout.text_dim)
      throw DimensionError("text embedding of offer " + offer.key().str(), layout.text_dim,
                           offer.text_embedding.size());
    for (double x : offer.text_embedding) out[at++] = x;
  }
  if (layout.mask.numerical) {
    for (double x : layout.stats.apply(offer.numerical())) out[at++] = x;
  }
  return out;
}

inline Vector fuse(const Offer& offer, const ProjectionHead& head) { return fuse(offer, head.layout()); }

/// Fused rows for a whole corpus, in corpus order (N x d_in).
inline Matrix fuse_corpus(const Corpus& corpus, const FusionLayout& layout) {
  Matrix x(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(layout.input_dim()));
  for (std::size_t i = 0; i < corpus.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = fuse(corpus[i], layout).transpose();
  return x;
}

/// Row-wise L2 normalization; a zero row is a degenerate projection.
inline Matrix normalize_rows(const Matrix& z) {
  Matrix v = z;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double n = v.row(i).norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("degenerate projection: zero or non-finite output vector");
    v.row(i) /= n;
  }
  return v;
}

/// Head output for one fused vector, L2-normalized.
inline Vector project(const ProjectionHead& head, const Vector& fused) {
  Matrix row = fused.transpose();
  return normalize_rows(head.forward_raw(row)).row(0).transpose();
}

/// Unit embeddings of a corpus, aligned with corpus order.
struct CorpusEmbeddings {
  std::vector<OfferKey> keys;
  Matrix vectors;  // keys.size() x dim, unit rows

  std::size_t size() const { return keys.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }

  std::map<OfferKey, Vector> as_map() const {
    std::map<OfferKey, Vector> m;
    for (std::size_t i = 0; i < keys.size(); ++i) m.emplace(keys[i], vectors.row(static_cast<Eigen::Index>(i)).transpose());
    return m;
  }
};

namespace detail {

template <typename RowMap>
CorpusEmbeddings embed_rows(const Corpus& corpus, const FusionLayout& layout, RowMap map_rows) {
  CorpusEmbeddings out;
  out.keys.reserve(corpus.size());
  Matrix x(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(layout.input_dim()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      x.row(static_cast<Eigen::Index>(i)) = fuse(corpus[i], layout).transpose();
    } catch (const Error& e) {
      throw Error("offer " + corpus[i].key().str() + ": " + e.what());
    }
    out.keys.push_back(corpus[i].key());
  }
  Matrix z = map_rows(x);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = z.row(i).norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw DomainError("offer " + out.keys[static_cast<std::size_t>(i)].str() + ": degenerate projection");
    z.row(i) /= n;
  }
  out.vectors = std::move(z);
  return out;
}

}  // namespace detail

/// project(fuse(offer)) for every offer.
inline CorpusEmbeddings embed_corpus(const Corpus& corpus, const ProjectionHead& head) {
  return detail::embed_rows(corpus, head.layout(), [&](const Matrix& x) { return head.forward_raw(x); });
}

/// Baseline without a trained head: the normalized fused vector itself.
inline CorpusEmbeddings embed_corpus_raw(const Corpus& corpus, const FusionLayout& layout) {
  return detail::embed_rows(corpus, layout, [](const Matrix& x) { return x; });
}

}  // namespace prodmatch

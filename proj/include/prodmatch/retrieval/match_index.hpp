#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/linalg.hpp"
#include "prodmatch/domain/corpus.hpp"
#include "prodmatch/domain/text.hpp"
#include "prodmatch/encoder/fusion.hpp"
#include "prodmatch/retrieval/jaro_winkler.hpp"
#include "prodmatch/retrieval/prediction.hpp"

namespace prodmatch {

struct IndexEntry {
  OfferKey key;
  std::string brand;  // normalized
  std::string category;
};

/// Immutable store of unit embeddings partitioned by normalized brand.
class MatchIndex {
 public:
  MatchIndex() = default;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }

  const IndexEntry& entry(std::size_t i) const { return entries_[i]; }
  auto embedding(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }

  const std::map<std::string, std::vector<std::size_t>>& brand_groups() const { return brand_groups_; }

  friend MatchIndex build_index(const CorpusEmbeddings& embeddings, const Corpus& corpus);

 private:
  std::vector<IndexEntry> entries_;
  Matrix vectors_;
  std::map<std::string, std::vector<std::size_t>> brand_groups_;
  // Code points of each group's brand, aligned with brand_groups_ iteration order.
  std::vector<std::u32string> group_brand_cps_;

  friend std::vector<std::size_t> brand_block(std::string_view, const MatchIndex&, double);
};

/// Index every corpus offer; each must have an embedding.
inline MatchIndex build_index(const CorpusEmbeddings& embeddings, const Corpus& corpus) {
  std::map<OfferKey, std::size_t> row_of;
  for (std::size_t i = 0; i < embeddings.keys.size(); ++i)
    if (!row_of.emplace(embeddings.keys[i], i).second)
      throw ConflictError("duplicate embedding for offer " + embeddings.keys[i].str());
  std::vector<std::string> missing;
  for (const Offer& o : corpus.offers())
    if (!row_of.contains(o.key())) missing.push_back(o.key().str());
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    throw NotFoundError("missing embeddings for " + std::to_string(missing.size()) + " offer(s): " + list);
  }

  MatchIndex index;
  index.vectors_.resize(static_cast<Eigen::Index>(corpus.size()), embeddings.vectors.cols());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Offer& o = corpus[i];
    index.entries_.push_back({o.key(), normalize_field(o.brand_raw), o.category});
    index.vectors_.row(static_cast<Eigen::Index>(i)) = embeddings.vectors.row(static_cast<Eigen::Index>(row_of[o.key()]));
    index.brand_groups_[index.entries_.back().brand].push_back(i);
  }
  for (const auto& [brand, members] : index.brand_groups_) index.group_brand_cps_.push_back(to_code_points(brand));
  return index;
}

/// Entries (ascending) whose normalized brand has Jaro-Winkler similarity
/// >= `sim_threshold` with the normalized query brand. Threshold 0 disables blocking.
inline std::vector<std::size_t> brand_block(std::string_view query_brand, const MatchIndex& index,
                                            double sim_threshold) {
  std::vector<std::size_t> block;
  if (sim_threshold <= 0.0) {
    block.resize(index.size());
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = i;
    return block;
  }
  const std::u32string q = to_code_points(normalize_field(query_brand));
  std::size_t g = 0;
  for (const auto& [brand, members] : index.brand_groups_) {
    if (jaro_winkler(q, index.group_brand_cps_[g++]) >= sim_threshold)
      block.insert(block.end(), members.begin(), members.end());
  }
  std::sort(block.begin(), block.end());
  return block;
}

inline bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.index_key.offer_id != b.index_key.offer_id) return a.index_key.offer_id < b.index_key.offer_id;
  return a.index_key.domain < b.index_key.domain;
}

/// Exact k nearest entries of `block` under d = 1 - q.v, clamped to [0, 2].
inline std::vector<Candidate> knn(const Vector& query, const MatchIndex& index, std::span<const std::size_t> block,
                                  std::size_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!index.empty() && static_cast<std::size_t>(query.size()) != index.dim())
    throw DimensionError("query embedding", index.dim(), static_cast<std::size_t>(query.size()));
  std::vector<Candidate> all;
  all.reserve(block.size());
  for (std::size_t e : block) {
    const double d = std::clamp(1.0 - index.embedding(e).dot(query.transpose()), 0.0, 2.0);
    all.push_back({index.entry(e).key, d, false});
  }
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), candidate_before);
  all.resize(take);
  return all;
}

/// Accept candidates with distance <= threshold (similarity >= 1 - threshold).
inline std::vector<Candidate> discriminate(std::vector<Candidate> candidates, double distance_threshold) {
  if (distance_threshold < 0.0 || distance_threshold > 2.0)
    throw ConfigError("distance threshold must lie in [0, 2]");
  for (Candidate& c : candidates) c.accepted = c.distance <= distance_threshold;
  return candidates;
}

}  // namespace prodmatch

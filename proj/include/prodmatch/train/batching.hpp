#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/domain/corpus.hpp"

namespace prodmatch {

/// Keep every paired offer plus a seeded uniform subsample of round(share * n)
/// of the n lone offers. Corpus order is preserved.
inline Corpus filter_lone_negatives(const Corpus& corpus, double share, std::uint64_t seed) {
  if (!(share >= 0.0 && share <= 1.0)) throw ConfigError("lone negative share must lie in [0, 1]");
  const std::set<OfferKey> lone = lone_offers(corpus);
  std::vector<OfferKey> pool(lone.begin(), lone.end());
  Rng rng(seed);
  rng.shuffle(std::span<OfferKey>(pool));
  const auto keep_n = static_cast<std::size_t>(std::llround(share * static_cast<double>(pool.size())));
  const std::set<OfferKey> kept(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep_n));
  return corpus.filter([&](const Offer& o) { return !lone.contains(o.key()) || kept.contains(o.key()); });
}

/// Offers that must travel together: one group per product id, lone offers
/// and unlabeled offers as singletons. Groups are in first-appearance order.
inline std::vector<std::vector<std::size_t>> offer_groups(const Corpus& corpus) {
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> group_of_product;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& pid = corpus[i].product_id;
    if (!pid) {
      groups.push_back({i});
      continue;
    }
    auto [it, inserted] = group_of_product.emplace(*pid, groups.size());
    if (inserted)
      groups.push_back({i});
    else
      groups[it->second].push_back(i);
  }
  return groups;
}

/// Mini-batch of corpus positions; members with equal labels are positives.
struct Batch {
  std::vector<std::size_t> members;
  std::vector<std::int64_t> labels;

  std::size_t size() const { return members.size(); }

  bool has_positive_pair() const {
    std::set<std::int64_t> seen;
    for (auto l : labels)
      if (!seen.insert(l).second) return true;
    return false;
  }
};

/// One epoch of batches: a seeded permutation of offer groups packed greedily
/// without splitting a group. The final partial batch is kept only if it
/// contains a positive pair.
inline std::vector<Batch> sample_batches(const Corpus& corpus, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  std::vector<std::vector<std::size_t>> groups = offer_groups(corpus);
  for (const auto& g : groups)
    if (g.size() > batch_size)
      throw ConfigError("product group of " + std::to_string(g.size()) + " offers exceeds batch_size " +
                        std::to_string(batch_size));
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Batch> batches;
  Batch current;
  for (std::size_t g : order) {
    if (current.size() + groups[g].size() > batch_size) {
      batches.push_back(std::move(current));
      current = {};
    }
    for (std::size_t m : groups[g]) {
      current.members.push_back(m);
      current.labels.push_back(static_cast<std::int64_t>(g));
    }
  }
  if (current.size() > 0 && current.has_positive_pair()) batches.push_back(std::move(current));
  return batches;
}

}  // namespace prodmatch

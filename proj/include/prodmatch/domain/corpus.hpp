#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/domain/offer.hpp"

namespace prodmatch {

enum class CorpusRole { train, validation, test_in_domain, test_out_domain };

inline std::string_view to_string(CorpusRole role) {
  switch (role) {
    case CorpusRole::train: return "train";
    case CorpusRole::validation: return "validation";
    case CorpusRole::test_in_domain: return "test-in-domain";
    case CorpusRole::test_out_domain: return "test-out-domain";
  }
  return "train";
}

inline CorpusRole corpus_role_from_string(std::string_view s) {
  if (s == "train") return CorpusRole::train;
  if (s == "validation") return CorpusRole::validation;
  if (s == "test-in-domain") return CorpusRole::test_in_domain;
  if (s == "test-out-domain") return CorpusRole::test_out_domain;
  throw ConfigError("unknown corpus role '" + std::string(s) + "'");
}

/// Unordered pair of offers, stored with first < second.
struct OfferPair {
  OfferKey first;
  OfferKey second;

  static OfferPair make(OfferKey a, OfferKey b) {
    if (b < a) std::swap(a, b);
    return {std::move(a), std::move(b)};
  }

  auto operator<=>(const OfferPair&) const = default;
  bool operator==(const OfferPair&) const = default;
};

/// An immutable collection of offers with unique (domain, offer_id) keys.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<Offer> offers, CorpusRole role = CorpusRole::train,
                  std::string index_domain = {}, std::string query_domain = {})
      : offers_(std::move(offers)),
        role_(role),
        index_domain_(std::move(index_domain)),
        query_domain_(std::move(query_domain)) {
    validate();
  }

  std::span<const Offer> offers() const { return offers_; }
  std::size_t size() const { return offers_.size(); }
  bool empty() const { return offers_.empty(); }
  const Offer& operator[](std::size_t i) const { return offers_[i]; }

  CorpusRole role() const { return role_; }
  const std::string& index_domain() const { return index_domain_; }
  const std::string& query_domain() const { return query_domain_; }

  const Offer* find(const OfferKey& key) const {
    auto it = by_key_.find(key);
    return it == by_key_.end() ? nullptr : &offers_[it->second];
  }

  std::optional<std::size_t> position(const OfferKey& key) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
  }

  /// Offers of one domain, in corpus order.
  Corpus restrict_to_domain(const std::string& domain, CorpusRole role) const {
    std::vector<Offer> out;
    for (const Offer& o : offers_)
      if (o.domain == domain) out.push_back(o);
    return Corpus(std::move(out), role);
  }

  /// Offers satisfying `keep`, same role and domains.
  template <typename Pred>
  Corpus filter(Pred keep) const {
    std::vector<Offer> out;
    for (const Offer& o : offers_)
      if (keep(o)) out.push_back(o);
    return Corpus(std::move(out), role_, index_domain_, query_domain_);
  }

  std::set<std::string> domains() const {
    std::set<std::string> d;
    for (const Offer& o : offers_) d.insert(o.domain);
    return d;
  }

 private:
  void validate() {
    std::map<std::pair<std::string, std::string>, std::string> product_in_domain;
    for (std::size_t i = 0; i < offers_.size(); ++i) {
      const Offer& o = offers_[i];
      if (o.domain.empty()) throw DomainError("offer '" + o.offer_id + "' has an empty domain");
      if (o.offer_id.empty()) throw DomainError("offer in domain '" + o.domain + "' has an empty offer_id");
      if (o.image_embeddings.empty())
        throw DomainError("offer " + o.key().str() + " has no image embeddings");
      const std::size_t d = o.image_embeddings.front().size();
      for (const auto& v : o.image_embeddings)
        if (v.size() != d) throw DimensionError("image embeddings of offer " + o.key().str(), d, v.size());
      (void)numerical_features(o.price, o.n_sizes);
      if (!by_key_.emplace(o.key(), i).second)
        throw ConflictError("duplicate offer " + o.key().str());
      if (o.product_id) {
        auto [it, inserted] = product_in_domain.emplace(std::pair{o.domain, *o.product_id}, o.offer_id);
        if (!inserted)
          throw DomainError("offers " + it->second + " and " + o.offer_id + " in domain '" + o.domain +
                            "' share product '" + *o.product_id + "' (within-domain matches are not allowed)");
      }
    }
  }

  std::vector<Offer> offers_;
  std::map<OfferKey, std::size_t> by_key_;
  CorpusRole role_ = CorpusRole::train;
  std::string index_domain_;
  std::string query_domain_;
};

/// Offers grouped by product id; offers without a product id are skipped.
inline std::map<std::string, std::vector<std::size_t>> product_groups(const Corpus& corpus) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].product_id) groups[*corpus[i].product_id].push_back(i);
  return groups;
}

/// Cross-domain pairs sharing a product id.
inline std::set<OfferPair> matching_pairs(const Corpus& corpus) {
  std::set<OfferPair> pairs;
  for (const auto& [pid, members] : product_groups(corpus)) {
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const Offer& x = corpus[members[a]];
        const Offer& y = corpus[members[b]];
        if (x.domain != y.domain) pairs.insert(OfferPair::make(x.key(), y.key()));
      }
  }
  return pairs;
}

/// Offers that appear in no matching pair.
inline std::set<OfferKey> lone_offers(const Corpus& corpus) {
  std::set<OfferKey> paired;
  for (const OfferPair& p : matching_pairs(corpus)) {
    paired.insert(p.first);
    paired.insert(p.second);
  }
  std::set<OfferKey> lone;
  for (const Offer& o : corpus.offers())
    if (!paired.contains(o.key())) lone.insert(o.key());
  return lone;
}

}  // namespace prodmatch

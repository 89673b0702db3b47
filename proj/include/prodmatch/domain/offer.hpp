#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prodmatch/domain/features.hpp"

namespace prodmatch {

inline const std::string kUnknownCategory = "unknown";

/// (domain, offer id) uniquely identifies an offer; offer ids are only unique
/// within their domain.
struct OfferKey {
  std::string domain;
  std::string offer_id;

  auto operator<=>(const OfferKey&) const = default;
  bool operator==(const OfferKey&) const = default;

  std::string str() const { return domain + "/" + offer_id; }
};

/// One seller listing of a product.
struct Offer {
  std::string offer_id;
  std::string domain;
  std::string brand_raw;
  std::string title_raw;
  std::string text_feature;
  double price = 1.0;
  std::int64_t n_sizes = 1;
  std::vector<std::vector<double>> image_embeddings;
  std::vector<double> text_embedding;
  std::optional<std::string> product_id;
  std::string category = kUnknownCategory;

  OfferKey key() const { return {domain, offer_id}; }

  NumericalFeatures numerical() const { return numerical_features(price, n_sizes); }

  std::size_t image_dim() const { return image_embeddings.empty() ? 0 : image_embeddings.front().size(); }
};

}  // namespace prodmatch

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "prodmatch/core/error.hpp"

namespace prodmatch {

inline constexpr std::size_t kNumericalDim = 3;

using NumericalFeatures = std::array<double, kNumericalDim>;

/// [n_sizes, ln(n_sizes), ln(price)]
inline NumericalFeatures numerical_features(double price, std::int64_t n_sizes) {
  if (!(price > 0.0) || !std::isfinite(price)) {
    std::ostringstream os;
    os << "price must be positive, got " << price;
    throw DomainError(os.str());
  }
  if (n_sizes < 1) throw DomainError("n_sizes must be at least 1, got " + std::to_string(n_sizes));
  const auto n = static_cast<double>(n_sizes);
  return {n, std::log(n), std::log(price)};
}

/// Per-component standardization fitted on a training corpus.
struct FeatureStats {
  NumericalFeatures mean{0.0, 0.0, 0.0};
  NumericalFeatures stddev{1.0, 1.0, 1.0};

  NumericalFeatures apply(const NumericalFeatures& x) const {
    NumericalFeatures out{};
    for (std::size_t i = 0; i < kNumericalDim; ++i) out[i] = (x[i] - mean[i]) / stddev[i];
    return out;
  }

  bool operator==(const FeatureStats&) const = default;
};

/// Zero-mean / unit-variance statistics; components with zero spread keep sd = 1.
template <typename Range>
FeatureStats fit_feature_stats(const Range& features) {
  FeatureStats stats;
  std::size_t n = 0;
  NumericalFeatures sum{0, 0, 0};
  for (const NumericalFeatures& f : features) {
    for (std::size_t i = 0; i < kNumericalDim; ++i) sum[i] += f[i];
    ++n;
  }
  if (n == 0) return stats;
  for (std::size_t i = 0; i < kNumericalDim; ++i) stats.mean[i] = sum[i] / static_cast<double>(n);
  NumericalFeatures sq{0, 0, 0};
  for (const NumericalFeatures& f : features)
    for (std::size_t i = 0; i < kNumericalDim; ++i) sq[i] += (f[i] - stats.mean[i]) * (f[i] - stats.mean[i]);
  for (std::size_t i = 0; i < kNumericalDim; ++i) {
    const double sd = std::sqrt(sq[i] / static_cast<double>(n));
    stats.stddev[i] = sd > 1e-12 ? sd : 1.0;
  }
  return stats;
}

}  // namespace prodmatch

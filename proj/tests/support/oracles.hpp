#pragma once

// Reference implementations for tests. Deliberately naive: no tiling, no
// max-shift, long double accumulation, quadratic scans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "prodmatch/prodmatch.hpp"

namespace oracle {

using prodmatch::Matrix;
using prodmatch::OfferKey;

inline long double dot(const Matrix& v, Eigen::Index a, Eigen::Index b) {
  long double s = 0.0L;
  for (Eigen::Index c = 0; c < v.cols(); ++c) s += static_cast<long double>(v(a, c)) * v(b, c);
  return s;
}

/// Direct transcription of the contrastive loss. `drop_lone` removes
/// positive-less members from every denominator.
inline long double supcon(const Matrix& v, const std::vector<std::int64_t>& labels, double tau,
                          bool drop_lone = false) {
  const auto n = static_cast<std::size_t>(v.rows());
  std::vector<std::size_t> pos(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && labels[i] == labels[j]) ++pos[i];
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    if (pos[i] == 0) continue;
    long double denom = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || (drop_lone && pos[k] == 0)) continue;
      denom += std::exp(dot(v, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) / tau);
    }
    long double inner = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || labels[j] != labels[i]) continue;
      inner += std::log(std::exp(dot(v, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / tau) / denom);
    }
    total += -inner / static_cast<long double>(pos[i]);
  }
  return total;
}

/// Loss of a head on raw inputs: forward, normalize, naive loss.
inline long double head_loss(const prodmatch::ProjectionHead& head, const prodmatch::InputBatch& batch, double tau) {
  Matrix z = head.forward_raw(batch.inputs);
  for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i) /= z.row(i).norm();
  return supcon(z, batch.labels, tau);
}

/// Central differences over every head parameter, blocks in
/// parameter_blocks() order.
inline std::vector<std::vector<double>> numeric_gradient(prodmatch::ProjectionHead head,
                                                         const prodmatch::InputBatch& batch, double tau,
                                                         double h = 1e-6) {
  std::vector<std::vector<double>> out;
  for (auto block : head.parameter_blocks()) {
    std::vector<double> g(block.size());
    for (std::size_t p = 0; p < block.size(); ++p) {
      const double keep = block[p];
      block[p] = keep + h;
      const long double up = head_loss(head, batch, tau);
      block[p] = keep - h;
      const long double down = head_loss(head, batch, tau);
      block[p] = keep;
      g[p] = static_cast<double>((up - down) / (2.0L * h));
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Cross-domain pairs by comparing every offer with every other.
inline std::set<prodmatch::OfferPair> pairs(const prodmatch::Corpus& c) {
  std::set<prodmatch::OfferPair> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      if (i != j && c[i].product_id && c[j].product_id && *c[i].product_id == *c[j].product_id &&
          c[i].domain != c[j].domain)
        out.insert(prodmatch::OfferPair::make(c[i].key(), c[j].key()));
  return out;
}

inline std::set<OfferKey> lones(const prodmatch::Corpus& c) {
  std::set<OfferKey> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    bool paired = false;
    for (std::size_t j = 0; j < c.size() && !paired; ++j)
      paired = i != j && c[i].product_id && c[j].product_id && *c[i].product_id == *c[j].product_id &&
               c[i].domain != c[j].domain;
    if (!paired) out.insert(c[i].key());
  }
  return out;
}

struct Neighbor {
  OfferKey key;
  double distance;
};

/// k nearest index rows by full scan, distance 1 - cosine, ties by key.
inline std::vector<Neighbor> knn(const Eigen::VectorXd& q, const prodmatch::CorpusEmbeddings& index, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < index.size(); ++i) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < q.size(); ++c) s += q[c] * index.vectors(static_cast<Eigen::Index>(i), c);
    all.push_back({index.keys[i], std::clamp(1.0 - s, 0.0, 2.0)});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.key.offer_id != b.key.offer_id) return a.key.offer_id < b.key.offer_id;
    return a.key.domain < b.key.domain;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

/// Area under the precision-recall curve of the top-1 candidates, computed
/// threshold by threshold with a full rescan at each.
inline double aucpr(const std::vector<prodmatch::MatchPrediction>& preds, const prodmatch::GroundTruth& gt) {
  auto is_match = [&](const prodmatch::MatchPrediction& p, const OfferKey& key) {
    auto it = gt.find(p.query_key);
    return it != gt.end() && it->second.contains(key);
  };
  std::size_t matched = 0;
  std::set<double> thresholds;
  for (const auto& p : preds) {
    auto it = gt.find(p.query_key);
    if (it != gt.end() && !it->second.empty()) ++matched;
    if (!p.candidates.empty()) thresholds.insert(p.candidates.front().distance);
  }
  long double area = 0.0L;
  long double prev_recall = 0.0L;
  for (double t : thresholds) {
    std::size_t accepted = 0, correct = 0;
    for (const auto& p : preds) {
      if (p.candidates.empty() || p.candidates.front().distance > t) continue;
      ++accepted;
      if (is_match(p, p.candidates.front().index_key)) ++correct;
    }
    const long double recall = static_cast<long double>(correct) / static_cast<long double>(matched);
    const long double precision = static_cast<long double>(correct) / static_cast<long double>(accepted);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return static_cast<double>(area);
}

/// Share of matched queries with a true match among the first k candidates.
inline double recall(const std::vector<prodmatch::MatchPrediction>& preds, const prodmatch::GroundTruth& gt,
                     std::size_t k) {
  std::size_t hits = 0, matched = 0;
  for (const auto& p : preds) {
    auto it = gt.find(p.query_key);
    if (it == gt.end() || it->second.empty()) continue;
    ++matched;
    for (std::size_t c = 0; c < std::min(k, p.candidates.size()); ++c)
      if (it->second.contains(p.candidates[c].index_key)) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(matched);
}

/// Posterior probability of a match after a positive verdict, via odds.
inline double posterior(double prior, double lr) {
  const double odds = prior / (1.0 - prior) * lr;
  return odds / (1.0 + odds);
}

}  // namespace oracle

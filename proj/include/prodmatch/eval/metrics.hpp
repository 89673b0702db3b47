#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/domain/corpus.hpp"
#include "prodmatch/retrieval/prediction.hpp"

namespace prodmatch {

/// True index matches of each query offer.
using GroundTruth = std::map<OfferKey, std::set<OfferKey>>;

/// Matches of `queries` among `index` (cross-domain, same product id).
inline GroundTruth ground_truth(const Corpus& queries, const Corpus& index) {
  std::map<std::string, std::vector<OfferKey>> by_product;
  for (const Offer& o : index.offers())
    if (o.product_id) by_product[*o.product_id].push_back(o.key());
  GroundTruth gt;
  for (const Offer& q : queries.offers()) {
    auto& matches = gt[q.key()];
    if (!q.product_id) continue;
    auto it = by_product.find(*q.product_id);
    if (it == by_product.end()) continue;
    for (const OfferKey& k : it->second)
      if (k.domain != q.domain) matches.insert(k);
  }
  return gt;
}

/// Matches of every offer among offers of the other domains of the same corpus.
inline GroundTruth ground_truth(const Corpus& corpus) { return ground_truth(corpus, corpus); }

namespace detail {

inline const std::set<OfferKey>* matches_of(const GroundTruth& gt, const OfferKey& q) {
  auto it = gt.find(q);
  return (it == gt.end() || it->second.empty()) ? nullptr : &it->second;
}

}  // namespace detail

/// Number of predictions whose query has at least one true match.
inline std::size_t matched_query_count(std::span<const MatchPrediction> predictions, const GroundTruth& gt) {
  std::size_t n = 0;
  for (const auto& p : predictions)
    if (detail::matches_of(gt, p.query_key)) ++n;
  return n;
}

/// Share of matched queries whose first k candidates contain a true match.
/// Distance thresholds are ignored.
inline double recall_at_k(std::span<const MatchPrediction> predictions, const GroundTruth& gt, std::size_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::size_t denominator = 0;
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    const auto* truth = detail::matches_of(gt, p.query_key);
    if (!truth) continue;
    ++denominator;
    const std::size_t n = std::min(k, p.candidates.size());
    for (std::size_t i = 0; i < n; ++i)
      if (truth->contains(p.candidates[i].index_key)) {
        ++hits;
        break;
      }
  }
  if (denominator == 0) throw UndefinedMetricError("recall@k undefined: no query has a ground-truth match");
  return static_cast<double>(hits) / static_cast<double>(denominator);
}

/// One point of the k=1 precision-recall sweep. The first point of a curve is
/// the "accept nothing" endpoint with threshold -inf, precision 1 and recall 0.
struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::size_t accepted_count = 0;
  std::size_t true_accepted = 0;

  bool operator==(const PRPoint&) const = default;
};

/// Sweep the distance threshold over the distinct top-1 distances.
inline std::vector<PRPoint> pr_curve(std::span<const MatchPrediction> predictions, const GroundTruth& gt) {
  struct Top1 {
    double distance;
    bool correct;
  };
  std::vector<Top1> tops;
  std::size_t matched = 0;
  for (const auto& p : predictions) {
    const auto* truth = detail::matches_of(gt, p.query_key);
    if (truth) ++matched;
    if (p.candidates.empty()) continue;
    tops.push_back({p.candidates.front().distance, truth && truth->contains(p.candidates.front().index_key)});
  }
  if (matched == 0) throw UndefinedMetricError("PR curve undefined: no query has a ground-truth match");
  std::sort(tops.begin(), tops.end(), [](const Top1& a, const Top1& b) { return a.distance < b.distance; });

  std::vector<PRPoint> curve;
  curve.push_back({-std::numeric_limits<double>::infinity(), 1.0, 0.0, 0, 0});
  std::size_t accepted = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < tops.size();) {
    const double t = tops[i].distance;
    while (i < tops.size() && tops[i].distance == t) {
      ++accepted;
      if (tops[i].correct) ++correct;
      ++i;
    }
    curve.push_back({t, static_cast<double>(correct) / static_cast<double>(accepted),
                     static_cast<double>(correct) / static_cast<double>(matched), accepted, correct});
  }
  return curve;
}

/// Step-wise area: sum over points of (R_i - R_{i-1}) * P_i.
inline double aucpr(std::span<const PRPoint> curve) {
  if (curve.empty()) throw UndefinedMetricError("AUCPR of an empty curve");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) area += (curve[i].recall - curve[i - 1].recall) * curve[i].precision;
  return area;
}

/// Curve point in effect at a given threshold (last point with threshold <= t).
inline PRPoint point_at_threshold(std::span<const PRPoint> curve, double threshold) {
  if (curve.empty()) throw UndefinedMetricError("empty curve");
  PRPoint best = curve.front();
  for (const auto& p : curve)
    if (p.threshold <= threshold) best = p;
  return best;
}

/// Largest threshold whose precision is at least `target`, if any point with
/// accepted predictions reaches it.
inline std::optional<double> threshold_for_precision(std::span<const PRPoint> curve, double target) {
  std::optional<double> best;
  for (const auto& p : curve)
    if (p.accepted_count > 0 && p.precision >= target) best = p.threshold;
  return best;
}

}  // namespace prodmatch

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/hitl/precision.hpp"
#include "prodmatch/hitl/rows.hpp"

namespace prodmatch {

/// Outcome of one labeled, aggregated row.
struct LabeledVerdict {
  Choice truth = kNoMatch;  // shown candidate that truly matches, 0 if none
  Choice verdict = kNoMatch;
};

/// Raw counts behind a confusion estimate. A row is positive when one of its
/// shown candidates is a true match.
struct ConfusionCounts {
  std::size_t true_positive = 0;    // confirmed the true candidate
  std::size_t false_negative = 0;   // positive row not confirmed correctly
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;   // negative row with a confirmed candidate
  std::size_t wrong_candidate = 0;  // positive row, a different candidate confirmed (subset of FN)

  std::size_t positives() const { return true_positive + false_negative; }
  std::size_t negatives() const { return true_negative + false_positive; }
  std::size_t rows() const { return positives() + negatives(); }

  void add(const LabeledVerdict& v) {
    if (v.truth != kNoMatch) {
      if (v.verdict == v.truth) {
        ++true_positive;
      } else {
        ++false_negative;
        if (v.verdict != kNoMatch) ++wrong_candidate;
      }
    } else if (v.verdict != kNoMatch) {
      ++false_positive;
    } else {
      ++true_negative;
    }
  }

  /// Share of positive rows among all rows (precision of the model output).
  double input_precision() const { return static_cast<double>(positives()) / static_cast<double>(rows()); }

  /// Share of confirmed rows whose confirmed candidate is the true match.
  double output_precision() const {
    const std::size_t confirmed = true_positive + false_positive + wrong_candidate;
    if (confirmed == 0) throw UndefinedMetricError("output precision undefined: no confirmed rows");
    return static_cast<double>(true_positive) / static_cast<double>(confirmed);
  }
};

struct ConfusionEstimate {
  double tpr = 0.0, fnr = 0.0, tnr = 0.0, fpr = 0.0;
  double tpr_stderr = 0.0, fnr_stderr = 0.0, tnr_stderr = 0.0, fpr_stderr = 0.0;
  double lr_plus = 0.0;  // +inf when fpr = 0 < tpr, NaN when both are 0
  double lr_plus_stderr = 0.0;
  std::size_t n_rows = 0;
  ConfusionCounts counts;
};

inline constexpr std::size_t kDefaultBootstrapResamples = 1000;

namespace detail {

inline void rates(const ConfusionCounts& c, double& tpr, double& fpr) {
  tpr = static_cast<double>(c.true_positive) / static_cast<double>(c.positives());
  fpr = static_cast<double>(c.false_positive) / static_cast<double>(c.negatives());
}

inline double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// TPR/FPR of the aggregated verdicts against ground truth with bootstrap
/// standard errors (rows resampled with replacement).
inline ConfusionEstimate confusion(std::span<const LabeledVerdict> rows, std::uint64_t seed = 0,
                                   std::size_t resamples = kDefaultBootstrapResamples) {
  ConfusionEstimate e;
  for (const auto& r : rows) e.counts.add(r);
  if (e.counts.positives() == 0) throw UndefinedMetricError("TPR undefined: no true-match rows");
  if (e.counts.negatives() == 0) throw UndefinedMetricError("FPR undefined: no non-match rows");
  e.n_rows = rows.size();
  detail::rates(e.counts, e.tpr, e.fpr);
  e.fnr = 1.0 - e.tpr;
  e.tnr = 1.0 - e.fpr;
  e.lr_plus = e.tpr == 0.0 && e.fpr == 0.0 ? std::numeric_limits<double>::quiet_NaN() : lr_plus(e.tpr, e.fpr);

  Rng rng(seed);
  std::vector<double> tprs, fprs, lrs;
  tprs.reserve(resamples);
  fprs.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < rows.size(); ++i) c.add(rows[rng.below(rows.size())]);
    if (c.positives() == 0 || c.negatives() == 0) continue;
    double tpr, fpr;
    detail::rates(c, tpr, fpr);
    tprs.push_back(tpr);
    fprs.push_back(fpr);
    if (fpr > 0.0) lrs.push_back(tpr / fpr);
  }
  e.tpr_stderr = e.fnr_stderr = detail::sample_sd(tprs);
  e.fpr_stderr = e.tnr_stderr = detail::sample_sd(fprs);
  e.lr_plus_stderr = detail::sample_sd(lrs);
  return e;
}

/// Labeled verdicts of every complete row carrying ground truth.
inline std::vector<LabeledVerdict> labeled_verdicts(std::span<const ValidationRow> rows,
                                                    AggregationRule rule = AggregationRule::majority) {
  std::vector<LabeledVerdict> out;
  for (const auto& r : rows) {
    if (!r.complete() || !r.truth) continue;
    out.push_back({*r.truth, aggregate_majority(r, rule)});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const ConfusionEstimate& e) {
  nlohmann::ordered_json j;
  j["n_rows"] = e.n_rows;
  j["TPR"] = e.tpr;
  j["FNR"] = e.fnr;
  j["TNR"] = e.tnr;
  j["FPR"] = e.fpr;
  j["stderr"] = {{"TPR", e.tpr_stderr}, {"FNR", e.fnr_stderr}, {"TNR", e.tnr_stderr}, {"FPR", e.fpr_stderr}};
  if (std::isinf(e.lr_plus))
    j["LR+"] = "inf";
  else if (std::isnan(e.lr_plus))
    j["LR+"] = nullptr;
  else
    j["LR+"] = e.lr_plus;
  j["LR+_stderr"] = e.lr_plus_stderr;
  j["counts"] = {{"TP", e.counts.true_positive},   {"FN", e.counts.false_negative},
                 {"TN", e.counts.true_negative},   {"FP", e.counts.false_positive},
                 {"wrong_candidate", e.counts.wrong_candidate}};
  return j;
}

}  // namespace prodmatch

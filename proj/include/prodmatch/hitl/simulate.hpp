#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/hitl/rows.hpp"

namespace prodmatch {

/// Probability that a single vote is correct, per true class of the row.
struct VoteAccuracy {
  double positive = 1.0;  // row shows the true match: vote names it
  double negative = 1.0;  // row shows no true match: vote is "no match"
};

/// Where a mistaken vote on a non-match row lands.
enum class FalseChoice { top_candidate, uniform_candidate };

/// Probability that strictly more than half of n independent votes with
/// per-vote probability p agree (majority-of-3: 3p^2 - 2p^3).
inline double majority_rate(double p, std::size_t n = 3) {
  double total = 0.0;
  for (std::size_t k = n / 2 + 1; k <= n; ++k) {
    double binom = 1.0;
    for (std::size_t i = 0; i < k; ++i) binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
    total += binom * std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
  }
  return total;
}

/// Per-vote probability whose majority_rate equals `target` (bisection).
inline double calibrate_vote_probability(double target, std::size_t n = 3) {
  if (!(target >= 0.0 && target <= 1.0)) throw DomainError("target rate must lie in [0, 1]");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (majority_rate(mid, n) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Per-vote accuracies under which majority-of-n voting reaches the given
/// row-level TPR and FPR (with mistakes on non-match rows concentrated on one
/// candidate, as FalseChoice::top_candidate simulates).
inline VoteAccuracy calibrate_vote_accuracy(double target_tpr, double target_fpr, std::size_t n = 3) {
  return {calibrate_vote_probability(target_tpr, n), 1.0 - calibrate_vote_probability(target_fpr, n)};
}

/// Independent synthetic votes for labeled rows. On a true-match row a wrong
/// vote is "no match"; on a non-match row it names a candidate.
inline std::vector<std::vector<Choice>> simulate_validators(std::span<const ValidationRow> rows,
                                                            const VoteAccuracy& accuracy, std::uint64_t seed,
                                                            FalseChoice false_choice = FalseChoice::top_candidate) {
  if (!(accuracy.positive >= 0.0 && accuracy.positive <= 1.0 && accuracy.negative >= 0.0 && accuracy.negative <= 1.0))
    throw DomainError("vote accuracies must lie in [0, 1]");
  Rng rng(seed);
  std::vector<std::vector<Choice>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.truth) throw DomainError("row " + std::to_string(row.row_id) + " carries no ground truth");
    std::vector<Choice> votes;
    const std::size_t need = row.judgments_required > row.votes.size() ? row.judgments_required - row.votes.size() : 0;
    for (std::size_t v = 0; v < need; ++v) {
      if (*row.truth != kNoMatch) {
        votes.push_back(rng.bernoulli(accuracy.positive) ? *row.truth : kNoMatch);
      } else if (rng.bernoulli(accuracy.negative) || row.candidates.empty()) {
        votes.push_back(kNoMatch);
      } else if (false_choice == FalseChoice::top_candidate) {
        votes.push_back(1);
      } else {
        votes.push_back(static_cast<Choice>(1 + rng.below(row.candidates.size())));
      }
    }
    out.push_back(std::move(votes));
  }
  return out;
}

/// Rows shaped like a validation experiment: `n_rows` rows of which
/// round(input_precision * n_rows) show the true match at a random position.
inline std::vector<ValidationRow> synthetic_rows(std::size_t n_rows, double input_precision, std::uint64_t seed,
                                                 std::size_t judgments = kDefaultJudgmentsPerRow) {
  if (!(input_precision >= 0.0 && input_precision <= 1.0)) throw DomainError("input precision must lie in [0, 1]");
  const auto n_pos = static_cast<std::size_t>(std::llround(input_precision * static_cast<double>(n_rows)));
  Rng rng(seed);
  std::vector<ValidationRow> rows(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    ValidationRow& r = rows[i];
    r.row_id = i + 1;
    r.query.key = {"query", "q" + std::to_string(i)};
    for (std::size_t c = 0; c < kMaxShownCandidates; ++c)
      r.candidates.push_back({{"index", "i" + std::to_string(i) + "_" + std::to_string(c)}, "", "", {}, std::nullopt});
    r.judgments_required = judgments;
    r.truth = kNoMatch;
  }
  std::vector<std::size_t> order(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 0; i < n_pos; ++i)
    rows[order[i]].truth = static_cast<Choice>(1 + rng.below(kMaxShownCandidates));
  return rows;
}

}  // namespace prodmatch

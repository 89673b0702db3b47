#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/domain/offer.hpp"

namespace prodmatch {

/// A validator's answer: 0 = no match, 1..3 = the shown candidate.
using Choice = int;
inline constexpr Choice kNoMatch = 0;
inline constexpr std::size_t kMaxShownCandidates = 3;
inline constexpr std::size_t kDefaultJudgmentsPerRow = 3;

struct Vote {
  std::string validator;
  Choice choice = kNoMatch;

  bool operator==(const Vote&) const = default;
};

/// What a validator sees of one offer. Price, sizes and colour are withheld.
struct OfferSnapshot {
  OfferKey key;
  std::string brand;
  std::string title;
  std::vector<std::string> image_refs;
  std::optional<double> similarity;  // candidates only

  bool operator==(const OfferSnapshot&) const = default;
};

enum class RowStatus { pending, complete };

enum class AggregationRule { majority, unanimous, any_positive };

inline std::string_view to_string(AggregationRule r) {
  switch (r) {
    case AggregationRule::majority: return "majority";
    case AggregationRule::unanimous: return "unanimous";
    case AggregationRule::any_positive: return "any_positive";
  }
  return "majority";
}

inline AggregationRule aggregation_rule_from_string(std::string_view s) {
  if (s == "majority") return AggregationRule::majority;
  if (s == "unanimous") return AggregationRule::unanimous;
  if (s == "any_positive") return AggregationRule::any_positive;
  throw ConfigError("unknown aggregation rule '" + std::string(s) + "'");
}

/// One queued prediction awaiting human judgments.
struct ValidationRow {
  std::uint64_t row_id = 0;
  OfferSnapshot query;
  std::vector<OfferSnapshot> candidates;  // at most 3
  std::vector<Vote> votes;
  std::size_t judgments_required = kDefaultJudgmentsPerRow;
  RowStatus status = RowStatus::pending;
  std::optional<Choice> verdict;
  /// Experiment mode only: the shown candidate that truly matches (0 if none).
  std::optional<Choice> truth;

  bool complete() const { return status == RowStatus::complete; }

  bool has_voted(std::string_view validator) const {
    return std::any_of(votes.begin(), votes.end(), [&](const Vote& v) { return v.validator == validator; });
  }

  /// Idempotency key: query plus the ordered candidate ids.
  std::string dedup_key() const {
    std::string k = query.key.str();
    for (const auto& c : candidates) k += "|" + c.key.str();
    return k;
  }

  bool operator==(const ValidationRow&) const = default;
};

/// Aggregate the choices of one complete row.
///  majority:     a candidate with more than half of the votes (2 of 3)
///  unanimous:    a candidate chosen by every vote
///  any_positive: the most chosen candidate if any vote names one (ties -> lower index)
inline Choice aggregate(std::span<const Choice> choices, AggregationRule rule = AggregationRule::majority) {
  std::array<std::size_t, kMaxShownCandidates + 1> count{};
  for (Choice c : choices) {
    if (c < 0 || c > static_cast<Choice>(kMaxShownCandidates)) throw DomainError("choice out of range");
    ++count[static_cast<std::size_t>(c)];
  }
  const std::size_t n = choices.size();
  for (Choice c = 1; c <= static_cast<Choice>(kMaxShownCandidates); ++c) {
    const std::size_t k = count[static_cast<std::size_t>(c)];
    switch (rule) {
      case AggregationRule::majority:
        if (2 * k > n) return c;
        break;
      case AggregationRule::unanimous:
        if (n > 0 && k == n) return c;
        break;
      case AggregationRule::any_positive:
        break;
    }
  }
  if (rule == AggregationRule::any_positive) {
    Choice best = kNoMatch;
    std::size_t best_count = 0;
    for (Choice c = 1; c <= static_cast<Choice>(kMaxShownCandidates); ++c)
      if (count[static_cast<std::size_t>(c)] > best_count) {
        best = c;
        best_count = count[static_cast<std::size_t>(c)];
      }
    return best;
  }
  return kNoMatch;
}

inline Choice aggregate_majority(const ValidationRow& row, AggregationRule rule = AggregationRule::majority) {
  if (!row.complete()) throw ConflictError("row " + std::to_string(row.row_id) + " is not complete");
  std::vector<Choice> choices;
  for (const Vote& v : row.votes) choices.push_back(v.choice);
  return aggregate(choices, rule);
}

inline nlohmann::ordered_json to_json(const OfferSnapshot& s) {
  nlohmann::ordered_json j;
  j["offer_id"] = s.key.offer_id;
  j["domain"] = s.key.domain;
  j["brand"] = s.brand;
  j["title"] = s.title;
  j["image_refs"] = s.image_refs;
  if (s.similarity) j["similarity"] = *s.similarity;
  return j;
}

inline OfferSnapshot snapshot_from_json(const nlohmann::json& j) {
  OfferSnapshot s;
  s.key = {j.at("domain").get<std::string>(), j.at("offer_id").get<std::string>()};
  s.brand = j.value("brand", std::string());
  s.title = j.value("title", std::string());
  s.image_refs = j.value("image_refs", std::vector<std::string>{});
  if (j.contains("similarity") && !j["similarity"].is_null()) s.similarity = j["similarity"].get<double>();
  return s;
}

/// Row as JSON. Votes and truth are included on request (truth never leaves
/// the server in production mode).
inline nlohmann::ordered_json to_json(const ValidationRow& r, bool with_votes = true, bool with_truth = true) {
  nlohmann::ordered_json j;
  j["row_id"] = r.row_id;
  j["query"] = to_json(r.query);
  j["candidates"] = nlohmann::ordered_json::array();
  for (const auto& c : r.candidates) j["candidates"].push_back(to_json(c));
  j["judgments_required"] = r.judgments_required;
  j["status"] = r.complete() ? "complete" : "pending";
  j["vote_count"] = r.votes.size();
  if (with_votes) {
    j["votes"] = nlohmann::ordered_json::array();
    for (const auto& v : r.votes) j["votes"].push_back({{"validator", v.validator}, {"choice", v.choice}});
  }
  if (r.verdict)
    j["verdict"] = *r.verdict;
  else
    j["verdict"] = nullptr;
  if (with_truth && r.truth) j["truth"] = *r.truth;
  return j;
}

inline ValidationRow row_from_json(const nlohmann::json& j) {
  ValidationRow r;
  r.row_id = j.at("row_id").get<std::uint64_t>();
  r.query = snapshot_from_json(j.at("query"));
  for (const auto& c : j.at("candidates")) r.candidates.push_back(snapshot_from_json(c));
  r.judgments_required = j.value("judgments_required", kDefaultJudgmentsPerRow);
  r.status = j.value("status", std::string("pending")) == "complete" ? RowStatus::complete : RowStatus::pending;
  if (j.contains("votes"))
    for (const auto& v : j["votes"]) r.votes.push_back({v.at("validator").get<std::string>(), v.at("choice").get<int>()});
  if (j.contains("verdict") && !j["verdict"].is_null()) r.verdict = j["verdict"].get<int>();
  if (j.contains("truth") && !j["truth"].is_null()) r.truth = j["truth"].get<int>();
  return r;
}

}  // namespace prodmatch

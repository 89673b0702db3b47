#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "prodmatch/domain/offer.hpp"

namespace prodmatch {

/// Distance is 1 - cosine similarity of unit embeddings; similarity = 1 - distance.
struct Candidate {
  OfferKey index_key;
  double distance = 0.0;
  bool accepted = false;

  double similarity() const { return 1.0 - distance; }
  bool operator==(const Candidate&) const = default;
};

/// Nearest index offers of one query, ascending by distance (ties by offer id).
struct MatchPrediction {
  OfferKey query_key;
  std::vector<Candidate> candidates;
  double threshold = 0.0;

  bool operator==(const MatchPrediction&) const = default;
};

inline nlohmann::ordered_json to_json(const MatchPrediction& p) {
  nlohmann::ordered_json j;
  j["query_id"] = p.query_key.offer_id;
  j["query_domain"] = p.query_key.domain;
  j["candidates"] = nlohmann::ordered_json::array();
  for (const Candidate& c : p.candidates) {
    nlohmann::ordered_json cj;
    cj["index_id"] = c.index_key.offer_id;
    cj["index_domain"] = c.index_key.domain;
    cj["distance"] = c.distance;
    cj["similarity"] = c.similarity();
    cj["accepted"] = c.accepted;
    j["candidates"].push_back(std::move(cj));
  }
  j["threshold"] = p.threshold;
  return j;
}

inline MatchPrediction prediction_from_json(const nlohmann::json& j) {
  MatchPrediction p;
  p.query_key = {j.value("query_domain", std::string()), j.at("query_id").get<std::string>()};
  for (const auto& cj : j.at("candidates")) {
    Candidate c;
    c.index_key = {cj.value("index_domain", std::string()), cj.at("index_id").get<std::string>()};
    c.distance = cj.at("distance").get<double>();
    c.accepted = cj.value("accepted", false);
    p.candidates.push_back(std::move(c));
  }
  p.threshold = j.value("threshold", 0.0);
  return p;
}

}  // namespace prodmatch

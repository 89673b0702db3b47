#pragma once

#include <string>
#include <vector>

#include "prodmatch/retrieval/match_index.hpp"

namespace prodmatch {

struct RetrievalParams {
  std::size_t k = 3;
  double brand_threshold = 0.85;
  double distance_threshold = 0.2;
};

struct QueryFailure {
  OfferKey query_key;
  std::string reason;
};

struct MatchRun {
  std::vector<MatchPrediction> predictions;
  std::vector<QueryFailure> failures;
};

/// brand_block -> knn -> discriminate for every query offer. A failing query is
/// reported and skipped.
inline MatchRun match_domains(const Corpus& queries, const CorpusEmbeddings& query_embeddings, const MatchIndex& index,
                              const RetrievalParams& params) {
  if (params.k < 1) throw ConfigError("k must be >= 1");
  if (params.distance_threshold < 0.0 || params.distance_threshold > 2.0)
    throw ConfigError("distance threshold must lie in [0, 2]");
  std::map<OfferKey, std::size_t> row_of;
  for (std::size_t i = 0; i < query_embeddings.keys.size(); ++i) row_of.emplace(query_embeddings.keys[i], i);

  MatchRun run;
  run.predictions.reserve(queries.size());
  for (const Offer& q : queries.offers()) {
    auto it = row_of.find(q.key());
    if (it == row_of.end()) {
      run.failures.push_back({q.key(), "no embedding"});
      continue;
    }
    try {
      const Vector v = query_embeddings.vectors.row(static_cast<Eigen::Index>(it->second)).transpose();
      const std::vector<std::size_t> block = brand_block(q.brand_raw, index, params.brand_threshold);
      MatchPrediction p;
      p.query_key = q.key();
      p.threshold = params.distance_threshold;
      p.candidates = discriminate(knn(v, index, block, params.k), params.distance_threshold);
      run.predictions.push_back(std::move(p));
    } catch (const Error& e) {
      run.failures.push_back({q.key(), e.what()});
    }
  }
  return run;
}

/// Exhaustive retrieval inside one multi-domain set: each offer queries all
/// offers of other domains. Used for validation during training.
inline std::vector<MatchPrediction> cross_domain_neighbors(const CorpusEmbeddings& embeddings, const Corpus& corpus,
                                                           std::size_t k) {
  if (embeddings.keys.size() != corpus.size())
    throw DimensionError("cross-domain embeddings", corpus.size(), embeddings.keys.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (embeddings.keys[i] != corpus[i].key()) throw Error("embeddings are not aligned with corpus order");
  std::vector<MatchPrediction> out;
  out.reserve(corpus.size());
  const Matrix sims = embeddings.vectors * embeddings.vectors.transpose();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::vector<Candidate> all;
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      if (corpus[j].domain == corpus[i].domain) continue;
      const double d = std::clamp(1.0 - sims(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0, 2.0);
      all.push_back({corpus[j].key(), d, true});
    }
    const std::size_t take = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), candidate_before);
    all.resize(take);
    out.push_back({corpus[i].key(), std::move(all), 2.0});
  }
  return out;
}

}  // namespace prodmatch

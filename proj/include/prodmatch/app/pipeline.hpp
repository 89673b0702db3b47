#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prodmatch/app/config.hpp"
#include "prodmatch/core/error.hpp"
#include "prodmatch/domain/corpus_io.hpp"
#include "prodmatch/domain/embedding_file.hpp"
#include "prodmatch/encoder/fusion.hpp"
#include "prodmatch/encoder/head_io.hpp"
#include "prodmatch/eval/report.hpp"
#include "prodmatch/hitl/service.hpp"
#include "prodmatch/hitl/store.hpp"
#include "prodmatch/retrieval/match.hpp"
#include "prodmatch/train/trainer.hpp"

namespace prodmatch {

/// Failure of one pipeline stage; artifacts of earlier stages are kept.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& detail)
      : Error("stage '" + stage + "' failed: " + detail), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline const std::vector<std::string> kPipelineStages = {"training",  "encoding",   "indexing",
                                                         "retrieval", "evaluation", "enqueue"};

/// Embeddings in corpus order as a sidecar table.
inline EmbeddingTable to_table(const CorpusEmbeddings& e) {
  EmbeddingTable t;
  t.dim = static_cast<std::uint32_t>(e.vectors.cols());
  t.values.reserve(static_cast<std::size_t>(e.vectors.size()));
  for (Eigen::Index i = 0; i < e.vectors.rows(); ++i)
    for (Eigen::Index j = 0; j < e.vectors.cols(); ++j) t.values.push_back(static_cast<float>(e.vectors(i, j)));
  return t;
}

/// Embedding file rows aligned with `corpus` order, re-normalized in double.
inline CorpusEmbeddings load_corpus_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
  const EmbeddingTable t = read_embedding_table(path);
  if (t.count() != corpus.size())
    throw FormatError(path.string(), 0,
                      "holds " + std::to_string(t.count()) + " rows for a corpus of " + std::to_string(corpus.size()));
  CorpusEmbeddings e;
  e.vectors.resize(static_cast<Eigen::Index>(t.count()), t.dim);
  for (std::size_t i = 0; i < t.count(); ++i) {
    const auto row = t.row(i);
    for (std::size_t j = 0; j < t.dim; ++j)
      e.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    const double n = e.vectors.row(static_cast<Eigen::Index>(i)).norm();
    if (!(n > 0.0)) throw FormatError(path.string(), 0, "row " + std::to_string(i) + " is a zero vector");
    e.vectors.row(static_cast<Eigen::Index>(i)) /= n;
    e.keys.push_back(corpus[i].key());
  }
  return e;
}

inline void write_predictions(const std::filesystem::path& path, const std::vector<MatchPrediction>& preds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& p : preds) os << to_json(p).dump() << '\n';
  if (!os) throw Error("write failed: " + path.string());
}

inline std::vector<MatchPrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open predictions file " + path.string());
  std::vector<MatchPrediction> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(path.string(), n, e.what());
    }
  }
  return out;
}

/// Row snapshots drawn from the corpora the predictions came from. Image refs
/// are "<domain>/<offer_id>#<i>" placeholders; price and sizes are withheld.
inline SnapshotFn corpus_snapshots(const Corpus& queries, const Corpus& index) {
  return [&queries, &index](const OfferKey& key) {
    const Offer* o = queries.find(key);
    if (!o) o = index.find(key);
    if (!o) return key_only_snapshot(key);
    OfferSnapshot s{key, o->brand_raw, o->title_raw, {}, std::nullopt};
    for (std::size_t i = 0; i < o->image_embeddings.size(); ++i) s.image_refs.push_back(key.str() + "#" + std::to_string(i));
    return s;
  };
}

/// Position of the shown candidate sharing the query's product id (0 if none);
/// nullopt when the query is unlabeled.
inline TruthFn corpus_truth(const Corpus& queries, const Corpus& index) {
  return [&queries, &index](const OfferKey& q, const std::vector<OfferKey>& shown) -> std::optional<Choice> {
    const Offer* qo = queries.find(q);
    if (!qo || !qo->product_id) return std::nullopt;
    for (std::size_t i = 0; i < shown.size(); ++i) {
      const Offer* c = index.find(shown[i]);
      if (c && c->product_id == qo->product_id) return static_cast<Choice>(i + 1);
    }
    return kNoMatch;
  };
}

/// Loaded inputs of the retrieval stages.
struct MatchingInputs {
  Corpus index;
  Corpus queries;
  ProjectionHead head;
};

inline MatchingInputs load_matching_inputs(const AppConfig& c) {
  MatchingInputs in;
  const auto head_path = c.resolve(c.head);
  if (!std::filesystem::exists(head_path)) throw StageError("encoding", "head file not found: " + head_path.string());
  try {
    in.head = load_head(head_path);
    in.index = ingest_offers(c.resolve(c.corpus.index));
    in.queries = ingest_offers(c.resolve(c.corpus.query));
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("encoding", e.what());
  }
  return in;
}

struct MatchingOutputs {
  CorpusEmbeddings index_embeddings;
  CorpusEmbeddings query_embeddings;
  MatchRun run;
};

inline MatchingOutputs run_matching(const MatchingInputs& in, const RetrievalParams& params) {
  MatchingOutputs out;
  try {
    out.index_embeddings = embed_corpus(in.index, in.head);
    out.query_embeddings = embed_corpus(in.queries, in.head);
  } catch (const std::exception& e) {
    throw StageError("encoding", e.what());
  }
  MatchIndex index;
  try {
    index = build_index(out.index_embeddings, in.index);
  } catch (const std::exception& e) {
    throw StageError("indexing", e.what());
  }
  try {
    out.run = match_domains(in.queries, out.query_embeddings, index, params);
  } catch (const std::exception& e) {
    throw StageError("retrieval", e.what());
  }
  return out;
}

/// Train → encode → index → retrieve → evaluate → enqueue. Artifacts land in
/// the output directory; the returned report (also written there as
/// run_report.json) names them relative to it and contains no timings, so
/// identical inputs give byte-identical reports.
inline nlohmann::ordered_json run_pipeline(const AppConfig& c) {
  c.validate();
  const std::filesystem::path out = c.resolve(c.output_dir);
  std::filesystem::create_directories(out);
  nlohmann::ordered_json report;
  report["format"] = "prodmatch-run/v1";
  report["version"] = PRODMATCH_VERSION;
  report["seeds"] = {{"seed", c.seed}, {"training", c.training.seed}};
  nlohmann::ordered_json cfg = to_json(c);
  cfg.erase("data_dir");
  cfg.erase("output_dir");
  report["config"] = cfg;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();

  const auto write_report = [&] {
    report["stages"] = stages;
    report["counts"] = counts;
    report["metrics"] = metrics;
    report["artifacts"] = artifacts;
    std::ofstream os(out / "run_report.json", std::ios::trunc);
    os << report.dump(2) << '\n';
  };
  const auto fail = [&](const StageError& e) {
    stages[e.stage()] = "failed";
    report["error"] = {{"stage", e.stage()}, {"detail", e.what()}};
    write_report();
    throw e;
  };

  try {
    if (c.train) {
      try {
        const Corpus train_corpus = ingest_offers(c.resolve(c.corpus.train));
        TrainResult result;
        if (!c.corpus.validation.empty())
          result = train(train_corpus, ingest_offers(c.resolve(c.corpus.validation)), c.training);
        else
          result = train(train_corpus, c.training);
        std::filesystem::create_directories(c.resolve(c.head).parent_path());
        save_head(c.resolve(c.head), result.head);
        write_history_csv(out / "history.csv", result.history);
        artifacts["history"] = "history.csv";
        counts["train_offers"] = result.train_offers;
        counts["validation_offers"] = result.validation_offers;
        const EpochRecord& last = result.history.back();
        metrics["training"] = {{"final_loss", last.loss},
                               {"validation_R@1", last.recall_at_1 ? nlohmann::ordered_json(*last.recall_at_1) : nullptr},
                               {"validation_R@3", last.recall_at_3 ? nlohmann::ordered_json(*last.recall_at_3) : nullptr}};
        stages["training"] = "ok";
      } catch (const std::exception& e) {
        throw StageError("training", e.what());
      }
    } else {
      stages["training"] = "skipped";
    }

    const MatchingInputs in = load_matching_inputs(c);
    const MatchingOutputs m = run_matching(in, c.retrieval);
    try {
      write_embedding_table(out / "index.emb.mfeb", to_table(m.index_embeddings));
      write_embedding_table(out / "query.emb.mfeb", to_table(m.query_embeddings));
    } catch (const std::exception& e) {
      throw StageError("encoding", e.what());
    }
    stages["encoding"] = "ok";
    stages["indexing"] = "ok";
    artifacts["index_embeddings"] = "index.emb.mfeb";
    artifacts["query_embeddings"] = "query.emb.mfeb";
    counts["index_offers"] = in.index.size();
    counts["query_offers"] = in.queries.size();

    try {
      write_predictions(out / "predictions.jsonl", m.run.predictions);
    } catch (const std::exception& e) {
      throw StageError("retrieval", e.what());
    }
    stages["retrieval"] = "ok";
    artifacts["predictions"] = "predictions.jsonl";
    counts["predictions"] = m.run.predictions.size();
    counts["query_failures"] = m.run.failures.size();
    std::size_t accepted = 0;
    for (const auto& p : m.run.predictions)
      if (!p.candidates.empty() && p.candidates.front().accepted) ++accepted;
    counts["accepted_top1"] = accepted;

    try {
      const GroundTruth gt = ground_truth(in.queries, in.index);
      if (matched_query_count(m.run.predictions, gt) == 0) {
        stages["evaluation"] = "skipped";
      } else {
        EvalReport r = evaluate(m.run.predictions, gt, c.eval_ks);
        r.per_category = per_category_report(
            m.run.predictions, gt,
            [&](const OfferKey& k) {
              const Offer* o = in.queries.find(k);
              return o ? o->category : kUnknownCategory;
            },
            c.eval_ks, c.min_category_queries);
        std::ofstream(out / "eval_report.json", std::ios::trunc) << to_json(r).dump(2) << '\n';
        std::map<std::string, const EvalReport*> series{{"all", &r}};
        for (const auto& [name, sub] : r.per_category) series.emplace(name, &sub);
        std::ofstream(out / "pr_curve.svg", std::ios::trunc) << pr_chart_svg(series);
        artifacts["eval_report"] = "eval_report.json";
        artifacts["pr_chart"] = "pr_curve.svg";
        nlohmann::ordered_json em = to_json(r, false);
        em.erase("per_category");
        metrics["evaluation"] = em;
        stages["evaluation"] = "ok";
      }
    } catch (const std::exception& e) {
      throw StageError("evaluation", e.what());
    }

    try {
      StoreOptions so;
      so.rule = c.aggregation;
      so.p_model = c.p_model;
      so.bootstrap_seed = c.seed;
      HitlStore store = HitlStore::open(out / "hitl", so);
      const auto drafts = rows_for_predictions(m.run.predictions, c.hitl, corpus_snapshots(in.queries, in.index),
                                               c.experiment_mode ? corpus_truth(in.queries, in.index) : TruthFn());
      store.add_rows(drafts);
      counts["rows_in_band"] = drafts.size();
      counts["rows_in_store"] = store.size();
      artifacts["hitl_store"] = "hitl";
      stages["enqueue"] = "ok";
    } catch (const std::exception& e) {
      throw StageError("enqueue", e.what());
    }
  } catch (const StageError& e) {
    fail(e);
  }
  write_report();
  return report;
}

/// POST /match-jobs handler: re-runs retrieval with optional parameter
/// overrides ({"k", "brand_sim", "dist_threshold"}) and enqueues in-band rows.
inline MatchJobFn make_match_job(const AppConfig& c, HitlStore& store) {
  return [c, &store](const nlohmann::json& request) {
    RetrievalParams params = c.retrieval;
    params.k = request.value("k", params.k);
    params.brand_threshold = request.value("brand_sim", params.brand_threshold);
    params.distance_threshold = request.value("dist_threshold", params.distance_threshold);
    if (params.k < 1 || !(params.brand_threshold >= 0.0 && params.brand_threshold <= 1.0) ||
        !(params.distance_threshold >= 0.0 && params.distance_threshold <= 2.0))
      throw DomainError("retrieval parameters out of range");
    const MatchingInputs in = load_matching_inputs(c);
    MatchingOutputs m = run_matching(in, params);
    const auto created = store.enqueue_predictions(m.run.predictions, c.hitl, corpus_snapshots(in.queries, in.index),
                                                   c.experiment_mode ? corpus_truth(in.queries, in.index) : TruthFn());
    MatchJobResult result;
    result.summary = {{"predictions", m.run.predictions.size()},
                      {"query_failures", m.run.failures.size()},
                      {"rows_created", created.size()},
                      {"rows_in_store", store.size()}};
    result.predictions = std::move(m.run.predictions);
    return result;
  };
}

}  // namespace prodmatch

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/encoder/fusion.hpp"
#include "prodmatch/encoder/projection_head.hpp"
#include "prodmatch/eval/metrics.hpp"
#include "prodmatch/retrieval/match.hpp"
#include "prodmatch/train/adamw.hpp"
#include "prodmatch/train/batching.hpp"
#include "prodmatch/train/supcon.hpp"

namespace prodmatch {

struct TrainConfig {
  double temperature = 0.06;
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 16384;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  double lone_negative_share = 0.0;
  std::size_t output_dim = kDefaultOutputDim;
  bool hidden_layer = false;
  ModalityMask modalities;
  double validation_fraction = 0.1;

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (!(lone_negative_share >= 0.0 && lone_negative_share <= 1.0))
      throw ConfigError("lone_negative_share must lie in [0, 1]");
    if (output_dim < 1) throw ConfigError("output_dim must be >= 1");
    if (!modalities.any()) throw ConfigError("at least one modality must be enabled");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
      throw ConfigError("validation_fraction must lie in [0, 1)");
  }
};

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.temperature = j.value("temperature", c.temperature);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.lone_negative_share = j.value("lone_negative_share", c.lone_negative_share);
  c.output_dim = j.value("output_dim", c.output_dim);
  c.hidden_layer = j.value("hidden_layer", c.hidden_layer);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  if (j.contains("modalities")) {
    const auto& m = j["modalities"];
    c.modalities = {m.value("image", true), m.value("text", true), m.value("numerical", true)};
  }
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"temperature", c.temperature},
       {"learning_rate", c.learning_rate},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"weight_decay", c.weight_decay},
       {"seed", c.seed},
       {"lone_negative_share", c.lone_negative_share},
       {"output_dim", c.output_dim},
       {"hidden_layer", c.hidden_layer},
       {"validation_fraction", c.validation_fraction},
       {"modalities",
        {{"image", c.modalities.image}, {"text", c.modalities.text}, {"numerical", c.modalities.numerical}}}};
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean per-anchor loss over the epoch's batches
  std::optional<double> recall_at_1;
  std::optional<double> recall_at_3;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  ProjectionHead head;
  std::vector<EpochRecord> history;
  std::size_t train_offers = 0;
  std::size_t validation_offers = 0;
};

class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, std::size_t batch, const std::string& detail)
      : Error("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " +
              detail),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Seeded split by offer group: round(fraction * groups) groups go to validation.
inline std::pair<Corpus, Corpus> split_validation(const Corpus& corpus, double fraction, std::uint64_t seed) {
  auto groups = offer_groups(corpus);
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(groups.size())));
  std::vector<char> is_val(corpus.size(), 0);
  for (std::size_t i = 0; i < n_val; ++i)
    for (std::size_t m : groups[order[i]]) is_val[m] = 1;
  std::vector<Offer> train, val;
  for (std::size_t i = 0; i < corpus.size(); ++i) (is_val[i] ? val : train).push_back(corpus[i]);
  return {Corpus(std::move(train), CorpusRole::train), Corpus(std::move(val), CorpusRole::validation)};
}

/// Fusion layout for a corpus: dimensions from its first offer, numerical
/// standardization fitted over all of its offers.
inline FusionLayout fit_layout(const Corpus& corpus, ModalityMask mask) {
  if (corpus.empty()) throw DomainError("cannot fit a fusion layout on an empty corpus");
  FusionLayout layout;
  layout.image_dim = corpus[0].image_dim();
  layout.text_dim = corpus[0].text_embedding.size();
  layout.mask = mask;
  std::vector<NumericalFeatures> feats;
  feats.reserve(corpus.size());
  for (const Offer& o : corpus.offers()) feats.push_back(o.numerical());
  layout.stats = fit_feature_stats(feats);
  return layout;
}

/// Cross-domain R@1 / R@3 of `head` on a validation corpus, if it has matched offers.
inline std::pair<std::optional<double>, std::optional<double>> validation_recall(const Corpus& validation,
                                                                                  const ProjectionHead& head) {
  if (validation.empty()) return {};
  const GroundTruth gt = ground_truth(validation);
  const auto preds = cross_domain_neighbors(embed_corpus(validation, head), validation, 3);
  if (matched_query_count(preds, gt) == 0) return {};
  return {recall_at_k(preds, gt, 1), recall_at_k(preds, gt, 3)};
}

/// Contrastive training of a fresh head on `train_corpus`, with R@k tracked on `validation`.
inline TrainResult train(const Corpus& train_corpus, const Corpus& validation, const TrainConfig& config) {
  config.validate();
  const Corpus corpus = filter_lone_negatives(train_corpus, config.lone_negative_share, Rng::derive(config.seed, 1));
  if (matching_pairs(corpus).empty()) throw DomainError("training corpus has no matching pair");

  const FusionLayout layout = fit_layout(corpus, config.modalities);
  ProjectionHead head =
      ProjectionHead::create(layout, config.output_dim, config.hidden_layer, Rng::derive(config.seed, 2));
  // Fused inputs are computed once; only the head is trained.
  const Matrix fused = fuse_corpus(corpus, layout);
  AdamW optimizer(config.learning_rate, config.weight_decay);

  TrainResult result;
  result.train_offers = corpus.size();
  result.validation_offers = validation.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = sample_batches(corpus, config.batch_size, Rng::derive(config.seed, 1000 + epoch));
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      if (!batch.has_positive_pair()) continue;
      InputBatch input;
      input.inputs.resize(static_cast<Eigen::Index>(batch.size()), fused.cols());
      for (std::size_t r = 0; r < batch.size(); ++r)
        input.inputs.row(static_cast<Eigen::Index>(r)) = fused.row(static_cast<Eigen::Index>(batch.members[r]));
      input.labels = batch.labels;
      HeadGradient grad;
      try {
        grad = supcon_gradient(input, head, config.temperature);
      } catch (const DomainError& e) {
        throw TrainingError(epoch, b, e.what());
      }
      const double mean_loss = grad.loss / static_cast<double>(grad.anchors);
      if (!std::isfinite(mean_loss) || !std::isfinite(grad.norm()))
        throw TrainingError(epoch, b, "non-finite loss or gradient (loss = " + std::to_string(mean_loss) + ")");
      grad.scale(1.0 / static_cast<double>(grad.anchors));
      optimizer.step(head.parameter_blocks(), grad.blocks());
      loss_sum += mean_loss;
      ++loss_batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0;
    std::tie(rec.recall_at_1, rec.recall_at_3) = validation_recall(validation, head);
    result.history.push_back(rec);
  }
  result.head = std::move(head);
  return result;
}

/// Train with a seeded validation split carved out of `corpus`.
inline TrainResult train(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  auto [train_part, validation] = split_validation(corpus, config.validation_fraction, Rng::derive(config.seed, 3));
  return train(train_part, validation, config);
}

inline void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "epoch,loss,R@1,R@3\n";
  os.precision(10);
  for (const auto& r : history) {
    os << r.epoch << ',' << r.loss << ',';
    if (r.recall_at_1) os << *r.recall_at_1;
    os << ',';
    if (r.recall_at_3) os << *r.recall_at_3;
    os << '\n';
  }
}

}  // namespace prodmatch

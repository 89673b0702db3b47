#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/hitl/rows.hpp"
#include "prodmatch/hitl/store.hpp"
#include "prodmatch/retrieval/match.hpp"
#include "prodmatch/train/trainer.hpp"

namespace prodmatch {

/// Prefix of environment overrides. PRODMATCH_RETRIEVAL_K=5 sets
/// retrieval.k: the variable name is the prefix plus the upper-cased key
/// path joined by '_'. Values are parsed as JSON, falling back to a string.
inline constexpr const char* kEnvPrefix = "PRODMATCH_";

struct CorpusPaths {
  std::string train;       // empty: no training step possible
  std::string validation;  // optional
  std::string index;
  std::string query;
};

struct AppConfig {
  std::string data_dir = ".";   // base of every relative path below
  std::string output_dir = "run";
  CorpusPaths corpus;
  std::string head = "head.mfph";
  bool train = false;           // train (and overwrite) the head before encoding
  TrainConfig training;
  RetrievalParams retrieval;
  EnqueuePolicy hitl;
  AggregationRule aggregation = AggregationRule::majority;
  bool experiment_mode = false;  // attach ground truth to rows
  std::optional<double> p_model;
  std::vector<std::size_t> eval_ks = {1, 3};
  std::size_t min_category_queries = 20;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 7;

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : std::filesystem::path(data_dir) / path;
  }

  void validate() const {
    if (corpus.index.empty()) throw ConfigError("config: corpus.index is required");
    if (corpus.query.empty()) throw ConfigError("config: corpus.query is required");
    if (train && corpus.train.empty()) throw ConfigError("config: train=true needs corpus.train");
    if (head.empty()) throw ConfigError("config: head path is required");
    if (retrieval.k < 1) throw ConfigError("config: retrieval.k must be >= 1");
    if (!(retrieval.brand_threshold >= 0.0 && retrieval.brand_threshold <= 1.0))
      throw ConfigError("config: retrieval.brand_sim must lie in [0, 1]");
    if (!(retrieval.distance_threshold >= 0.0 && retrieval.distance_threshold <= 2.0))
      throw ConfigError("config: retrieval.dist_threshold must lie in [0, 2]");
    try {
      hitl.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (p_model && !(*p_model > 0.0 && *p_model <= 1.0)) throw ConfigError("config: hitl.p_model must lie in (0, 1]");
    if (eval_ks.empty()) throw ConfigError("config: eval.ks must not be empty");
    for (std::size_t k : eval_ks)
      if (k < 1) throw ConfigError("config: eval.ks entries must be >= 1");
    if (port < 0 || port > 65535) throw ConfigError("config: server.port must lie in [0, 65535]");
    training.validate();
  }
};

inline nlohmann::ordered_json to_json(const AppConfig& c) {
  nlohmann::json train_cfg;
  to_json(train_cfg, c.training);
  nlohmann::ordered_json j;
  j["data_dir"] = c.data_dir;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["corpus"] = {{"train", c.corpus.train},
                 {"validation", c.corpus.validation},
                 {"index", c.corpus.index},
                 {"query", c.corpus.query}};
  j["head"] = c.head;
  j["train"] = c.train;
  j["training"] = train_cfg;
  j["retrieval"] = {{"k", c.retrieval.k},
                    {"brand_sim", c.retrieval.brand_threshold},
                    {"dist_threshold", c.retrieval.distance_threshold}};
  j["hitl"] = {{"auto_accept_from", c.hitl.auto_accept_from},
               {"review_from", c.hitl.review_from},
               {"judgments_per_row", c.hitl.judgments_per_row},
               {"aggregation", to_string(c.aggregation)},
               {"experiment_mode", c.experiment_mode},
               {"p_model", c.p_model ? nlohmann::ordered_json(*c.p_model) : nlohmann::ordered_json(nullptr)}};
  j["eval"] = {{"ks", c.eval_ks}, {"min_category_queries", c.min_category_queries}};
  j["server"] = {{"host", c.host}, {"port", c.port}};
  return j;
}

inline AppConfig app_config_from_json(const nlohmann::json& j) {
  AppConfig c;
  try {
    c.data_dir = j.value("data_dir", c.data_dir);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    if (j.contains("corpus")) {
      const auto& cj = j["corpus"];
      c.corpus.train = cj.value("train", std::string());
      c.corpus.validation = cj.value("validation", std::string());
      c.corpus.index = cj.value("index", std::string());
      c.corpus.query = cj.value("query", std::string());
    }
    c.head = j.value("head", c.head);
    c.train = j.value("train", c.train);
    c.training.seed = c.seed;
    if (j.contains("training")) from_json(j["training"], c.training);
    if (j.contains("retrieval")) {
      const auto& r = j["retrieval"];
      c.retrieval.k = r.value("k", c.retrieval.k);
      c.retrieval.brand_threshold = r.value("brand_sim", c.retrieval.brand_threshold);
      c.retrieval.distance_threshold = r.value("dist_threshold", c.retrieval.distance_threshold);
    }
    if (j.contains("hitl")) {
      const auto& h = j["hitl"];
      c.hitl.auto_accept_from = h.value("auto_accept_from", c.hitl.auto_accept_from);
      c.hitl.review_from = h.value("review_from", c.hitl.review_from);
      c.hitl.judgments_per_row = h.value("judgments_per_row", c.hitl.judgments_per_row);
      c.aggregation = aggregation_rule_from_string(h.value("aggregation", std::string(to_string(c.aggregation))));
      c.experiment_mode = h.value("experiment_mode", c.experiment_mode);
      if (h.contains("p_model") && !h["p_model"].is_null()) c.p_model = h["p_model"].get<double>();
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      c.eval_ks = e.value("ks", c.eval_ks);
      c.min_category_queries = e.value("min_category_queries", c.min_category_queries);
    }
    if (j.contains("server")) {
      c.host = j["server"].value("host", c.host);
      c.port = j["server"].value("port", c.port);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

namespace detail {

inline void collect_leaves(const nlohmann::json& j, const std::string& path, std::vector<std::string>& out) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      collect_leaves(it.value(), path.empty() ? it.key() : path + "/" + it.key(), out);
  } else {
    out.push_back(path);
  }
}

inline std::string env_name(const std::string& pointer) {
  std::string name = kEnvPrefix;
  for (char ch : pointer) name += ch == '/' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return name;
}

}  // namespace detail

/// Applies PRODMATCH_* overrides to every known configuration key.
inline nlohmann::json apply_env_overrides(nlohmann::json j,
                                          const std::function<const char*(const char*)>& getenv = std::getenv) {
  nlohmann::json defaults = to_json(AppConfig{});
  defaults.merge_patch(j);
  std::vector<std::string> leaves;
  detail::collect_leaves(defaults, "", leaves);
  for (const auto& leaf : leaves) {
    const std::string name = detail::env_name(leaf);
    const char* value = getenv(name.c_str());
    if (!value) continue;
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
      parsed = std::string(value);
    }
    j[nlohmann::json::json_pointer("/" + leaf)] = parsed;
  }
  return j;
}

/// Reads a JSON config file, applies environment overrides, validates.
/// Relative paths inside resolve against data_dir, which itself defaults to
/// the directory of the config file.
inline AppConfig load_app_config(const std::filesystem::path& path,
                                 const std::function<const char*(const char*)>& getenv = std::getenv) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + path.string() + ": top level must be an object");
  const bool has_data_dir = j.contains("data_dir");
  j = apply_env_overrides(std::move(j), getenv);
  AppConfig c = app_config_from_json(j);
  if (!has_data_dir && !j.contains("data_dir")) c.data_dir = path.parent_path().empty() ? "." : path.parent_path().string();
  else if (std::filesystem::path(c.data_dir).is_relative())
    c.data_dir = (path.parent_path() / c.data_dir).lexically_normal().string();
  c.validate();
  return c;
}

}  // namespace prodmatch

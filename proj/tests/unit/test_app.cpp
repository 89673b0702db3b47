#include <gtest/gtest.h>

#include <cstdlib>
#include <map>

#include "prodmatch/app/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace prodmatch;

namespace {

std::string cli() { return PRODMATCH_CLI; }

int run(const std::string& args, const fixture::TempDir& dir) {
  const std::string cmd = cli() + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = fixture::read_file(e.path());
  return out;
}

AppConfig small_app(const fixture::TempDir& dir) {
  write_synth_corpus(dir / "data", generate(fixture::small_synth()), fixture::small_synth());
  AppConfig c;
  c.data_dir = (dir / "data").string();
  c.output_dir = (dir / "out").string();
  c.corpus = {"train.jsonl", "validation.jsonl", "test_index.jsonl", "test_in_query.jsonl"};
  c.head = "head.mfph";
  c.train = true;
  c.training.epochs = 5;
  c.training.batch_size = 128;
  c.training.output_dim = 16;
  c.experiment_mode = true;
  c.hitl.review_from = 0.0;
  c.min_category_queries = 5;
  return c;
}

}  // namespace

TEST(Synth, SameSeedWritesIdenticalFiles) {
  fixture::TempDir a, b;
  write_synth_corpus(a.path(), generate(fixture::small_synth(5)), fixture::small_synth(5));
  write_synth_corpus(b.path(), generate(fixture::small_synth(5)), fixture::small_synth(5));
  EXPECT_EQ(tree_bytes(a.path()), tree_bytes(b.path()));
  fixture::TempDir c;
  write_synth_corpus(c.path(), generate(fixture::small_synth(6)), fixture::small_synth(6));
  EXPECT_NE(tree_bytes(a.path()), tree_bytes(c.path()));
}

TEST(Synth, SplitsHaveTheDocumentedDomainStructure) {
  const SynthCorpus d = generate(fixture::small_synth());
  auto domains = [](const Corpus& c) {
    std::set<std::string> s;
    for (const auto& o : c.offers()) s.insert(o.domain);
    return s;
  };
  EXPECT_EQ(domains(d.train), (std::set<std::string>{"partnerA", "partnerB"}));
  EXPECT_EQ(domains(d.test_index), (std::set<std::string>{"partnerA"}));
  EXPECT_EQ(domains(d.test_in_query), (std::set<std::string>{"partnerB"}));
  EXPECT_EQ(domains(d.test_out_query), (std::set<std::string>{"partnerC"}));
  auto products = [](const Corpus& c) {
    std::set<std::string> s;
    for (const auto& o : c.offers())
      if (o.product_id) s.insert(*o.product_id);
    return s;
  };
  const auto train = products(d.train), val = products(d.validation), test = products(d.test_index);
  for (const auto& p : val) EXPECT_FALSE(train.contains(p)) << p;
  for (const auto& p : test) EXPECT_FALSE(train.contains(p) || val.contains(p)) << p;
  EXPECT_FALSE(lone_offers(d.train).empty());
  EXPECT_FALSE(matching_pairs(d.validation).empty());
  for (const auto& q : d.test_in_query.offers())
    if (q.product_id && !q.product_id->starts_with("lone")) {
      EXPECT_TRUE(test.contains(*q.product_id)) << *q.product_id;
    }
}

TEST(Synth, VariantsStayInTheirParentsSplit) {
  SynthConfig cfg = fixture::small_synth();
  cfg.variant_fraction = 0.6;
  const SynthCorpus d = generate(cfg);
  // Variants copy brand and title, so every title seen in validation is
  // absent from training unless an unrelated product drew the same one.
  std::map<std::string, std::set<std::string>> split_of_title;
  for (const auto& o : d.train.offers())
    if (o.product_id && o.domain == "partnerA") split_of_title[o.text_feature].insert("train");
  for (const auto& o : d.validation.offers())
    if (o.product_id && o.domain == "partnerA") split_of_title[o.text_feature].insert("validation");
  std::size_t shared = 0, total = 0;
  for (const auto& [title, splits] : split_of_title) {
    ++total;
    shared += splits.size() > 1;
  }
  EXPECT_LT(static_cast<double>(shared), 0.05 * static_cast<double>(total));
}

TEST(Synth, ConfigValidationAndJsonRoundTrip) {
  SynthConfig c = fixture::small_synth();
  nlohmann::ordered_json j;
  to_json(j, c);
  SynthConfig back;
  from_json(nlohmann::json(j), back);
  nlohmann::ordered_json j2;
  to_json(j2, back);
  EXPECT_EQ(j.dump(), j2.dump());
  c.detail_rank = c.d_img;
  EXPECT_THROW(c.validate(), ConfigError);
  c = fixture::small_synth();
  c.lone_negative_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = fixture::small_synth();
  c.n_domains = 1;
  EXPECT_THROW(generate(c), ConfigError);
}

TEST(Config, EnvironmentOverridesKnownKeys) {
  std::map<std::string, std::string> env{{"PRODMATCH_RETRIEVAL_K", "5"},
                                         {"PRODMATCH_HITL_AGGREGATION", "unanimous"},
                                         {"PRODMATCH_TRAINING_LEARNING_RATE", "0.01"},
                                         {"PRODMATCH_NOT_A_KEY", "1"}};
  auto getenv = [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const nlohmann::json j = apply_env_overrides(nlohmann::json::object(), getenv);
  EXPECT_EQ(j["retrieval"]["k"], 5);
  EXPECT_EQ(j["hitl"]["aggregation"], "unanimous");
  EXPECT_EQ(j["training"]["learning_rate"], 0.01);
  EXPECT_FALSE(j.contains("not"));
  const AppConfig c = app_config_from_json(j);
  EXPECT_EQ(c.retrieval.k, 5u);
  EXPECT_EQ(c.aggregation, AggregationRule::unanimous);
}

TEST(Config, LoadResolvesPathsAndValidates) {
  fixture::TempDir dir;
  fixture::write_file(dir / "cfg.json", R"({"corpus":{"index":"i.jsonl","query":"q.jsonl"},"retrieval":{"k":4}})");
  const auto none = [](const char*) -> const char* { return nullptr; };
  const AppConfig c = load_app_config(dir / "cfg.json", none);
  EXPECT_EQ(c.resolve(c.corpus.index), dir / "i.jsonl");
  EXPECT_EQ(c.retrieval.k, 4u);
  const AppConfig round = app_config_from_json(nlohmann::json(to_json(c)));
  EXPECT_EQ(to_json(round).dump(), to_json(c).dump());

  fixture::write_file(dir / "bad.json", R"({"corpus":{"index":"i.jsonl","query":"q.jsonl"},"retrieval":{"k":0}})");
  EXPECT_THROW(load_app_config(dir / "bad.json", none), ConfigError);
  fixture::write_file(dir / "nq.json", R"({"corpus":{"index":"i.jsonl"}})");
  EXPECT_THROW(load_app_config(dir / "nq.json", none), ConfigError);
  fixture::write_file(dir / "broken.json", "{");
  EXPECT_THROW(load_app_config(dir / "broken.json", none), ConfigError);
  EXPECT_THROW(load_app_config(dir / "absent.json", none), ConfigError);
}

TEST(Pipeline, ReportsAreByteIdenticalAcrossRuns) {
  fixture::TempDir dir;
  const AppConfig c = small_app(dir);
  const auto report = run_pipeline(c);
  EXPECT_EQ(report["format"], "prodmatch-run/v1");
  for (const char* stage : {"training", "encoding", "indexing", "retrieval", "evaluation", "enqueue"})
    EXPECT_EQ(report["stages"][stage], "ok") << stage;
  EXPECT_GT(report["counts"]["predictions"].get<std::size_t>(), 0u);
  EXPECT_TRUE(report["metrics"]["evaluation"].contains("aucpr"));
  const std::string first = fixture::read_file(dir / "out" / "run_report.json");
  const std::string preds = fixture::read_file(dir / "out" / "predictions.jsonl");
  std::filesystem::remove_all(dir / "out");
  run_pipeline(c);
  EXPECT_EQ(fixture::read_file(dir / "out" / "run_report.json"), first);
  EXPECT_EQ(fixture::read_file(dir / "out" / "predictions.jsonl"), preds);
}

TEST(Pipeline, MissingHeadFailsInTheEncodingStage) {
  fixture::TempDir dir;
  AppConfig c = small_app(dir);
  c.train = false;
  c.head = "absent.mfph";
  try {
    run_pipeline(c);
    FAIL() << "pipeline ran without a head";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "encoding");
  }
  const auto report = nlohmann::json::parse(fixture::read_file(dir / "out" / "run_report.json"));
  EXPECT_EQ(report["stages"]["encoding"], "failed");
  EXPECT_EQ(report["error"]["stage"], "encoding");
}

TEST(Cli, EndToEndSmoke) {
  fixture::TempDir dir;
  const std::string d = dir.path().string();
  fixture::write_file(dir / "synth.json", R"({"n_products":200,"d_img":16,"d_txt":8,"img_signal_rank":4,
    "txt_signal_rank":3,"detail_rank":2,"n_brands":10})");
  fixture::write_file(dir / "train.json", R"({"epochs":3,"batch_size":128,"output_dim":8})");
  ASSERT_EQ(run("synth --config " + d + "/synth.json --out " + d + "/data --seed 3", dir), 0);
  const auto manifest = nlohmann::json::parse(fixture::read_file(dir / "data" / "manifest.json"));
  EXPECT_EQ(manifest["format"], "prodmatch-synth/v1");
  EXPECT_EQ(manifest["config"]["seed"], 3);
  ASSERT_EQ(run("ingest --corpus " + d + "/data/train.jsonl", dir), 0);
  ASSERT_EQ(run("train --corpus " + d + "/data/train.jsonl --validation " + d + "/data/validation.jsonl --config " + d +
                    "/train.json --out " + d + "/head.mfph",
                dir),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "head.history.csv"));
  for (const char* split : {"test_index", "test_in_query"})
    ASSERT_EQ(run("embed --corpus " + d + "/data/" + split + ".jsonl --head " + d + "/head.mfph", dir), 0) << split;
  ASSERT_EQ(run("index --corpus " + d + "/data/test_index.jsonl --out " + d + "/index.json", dir), 0);
  ASSERT_EQ(run("match --index " + d + "/index.json --query " + d + "/data/test_in_query.jsonl --k 3 --out " + d +
                    "/preds.jsonl",
                dir),
            0);
  EXPECT_EQ(nlohmann::json::parse(fixture::read_file(dir / "stdout.txt"))["failures"].size(), 0u);
  ASSERT_EQ(run("eval --predictions " + d + "/preds.jsonl --corpus " + d + "/data/test_in_query.jsonl --corpus " + d +
                    "/data/test_index.jsonl --k 1,3 --out " + d + "/eval.json --plot " + d + "/pr.svg",
                dir),
            0);
  const auto eval = nlohmann::json::parse(fixture::read_file(dir / "eval.json"));
  EXPECT_TRUE(eval.contains("aucpr"));
  EXPECT_TRUE(eval["curve"][0]["threshold"].is_null());
  ASSERT_EQ(run("hitl-simulate --synthetic-rows 2000 --input-precision 0.3 --tpr 0.8 --fpr 0.02 --seed 1 --out " + d +
                    "/hitl.json",
                dir),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "hitl.json"));

  // A raw query embedding has a different width than the head's index: every
  // query fails and the verb reports it with exit code 3.
  ASSERT_EQ(run("embed --raw --corpus " + d + "/data/test_out_query.jsonl", dir), 0);
  EXPECT_EQ(run("match --index " + d + "/index.json --query " + d + "/data/test_out_query.jsonl --out " + d +
                    "/bad.jsonl",
                dir),
            3);
  EXPECT_EQ(run("ingest --corpus " + d + "/nope.jsonl", dir), 1);
  EXPECT_NE(fixture::read_file(dir / "stderr.txt").find("error:"), std::string::npos);

  fixture::write_file(dir / "pipe.json", R"({"data_dir":"data","output_dir":"run","head":"missing.mfph",
    "corpus":{"index":"test_index.jsonl","query":"test_in_query.jsonl"}})");
  EXPECT_EQ(run("pipeline --config " + d + "/pipe.json", dir), 2);
}

// prodmatch: command-line front end of the matching engine.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prodmatch/app/config.hpp"
#include "prodmatch/app/pipeline.hpp"
#include "prodmatch/hitl/service.hpp"
#include "prodmatch/prodmatch.hpp"

namespace fs = std::filesystem;
using namespace prodmatch;

namespace {

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  os << j.dump(2) << '\n';
  if (!os) throw Error("cannot write " + path.string());
}

nlohmann::ordered_json corpus_summary(const Corpus& c) {
  nlohmann::ordered_json j;
  j["offers"] = c.size();
  j["domains"] = c.domains();
  j["matching_pairs"] = matching_pairs(c).size();
  j["lone_offers"] = lone_offers(c).size();
  if (!c.empty()) {
    j["image_dim"] = c[0].image_dim();
    j["text_dim"] = c[0].text_embedding.size();
  }
  return j;
}

/// "<embeddings>+<corpus>", an index manifest written by `index`, or a plain
/// corpus whose embeddings sit next to it as <corpus stem>.emb.mfeb.
struct EmbeddedCorpus {
  Corpus corpus;
  CorpusEmbeddings embeddings;
};

EmbeddedCorpus load_embedded(const std::string& spec) {
  fs::path emb, corpus;
  if (const auto plus = spec.find('+'); plus != std::string::npos) {
    emb = spec.substr(0, plus);
    corpus = spec.substr(plus + 1);
  } else if (fs::path(spec).extension() == ".json") {
    const auto m = read_json_file(spec);
    const fs::path base = fs::path(spec).parent_path();
    emb = base / m.at("embeddings").get<std::string>();
    corpus = base / m.at("corpus").get<std::string>();
  } else {
    corpus = spec;
    emb = fs::path(spec).replace_extension(".emb.mfeb");
  }
  EmbeddedCorpus out;
  out.corpus = ingest_offers(corpus);
  out.embeddings = load_corpus_embeddings(emb, out.corpus);
  return out;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const long v = std::stol(part);
    if (v < 1) throw ConfigError("--k entries must be >= 1");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw ConfigError("--k needs at least one value");
  return ks;
}

int cmd_synth(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
  SynthConfig cfg;
  if (!config_path.empty()) from_json(read_json_file(config_path), cfg);
  if (seed) cfg.seed = *seed;
  const SynthCorpus data = generate(cfg);
  std::cout << write_synth_corpus(out, data, cfg).dump(2) << '\n';
  return 0;
}

int cmd_ingest(const std::string& corpus_path, const std::string& out, bool sidecars) {
  const Corpus c = ingest_offers(corpus_path);
  if (!out.empty()) write_offers(out, c, {sidecars});
  std::cout << corpus_summary(c).dump(2) << '\n';
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& validation_path, const std::string& config_path,
              const std::string& out, const std::string& history) {
  TrainConfig cfg;
  if (!config_path.empty()) from_json(read_json_file(config_path), cfg);
  const Corpus corpus = ingest_offers(corpus_path);
  const TrainResult r = validation_path.empty() ? train(corpus, cfg) : train(corpus, ingest_offers(validation_path), cfg);
  save_head(out, r.head);
  const fs::path hist = history.empty() ? fs::path(out).replace_extension(".history.csv") : fs::path(history);
  write_history_csv(hist, r.history);
  nlohmann::ordered_json j;
  j["head"] = out;
  j["history"] = hist.string();
  j["parameters"] = r.head.parameter_count();
  j["train_offers"] = r.train_offers;
  j["validation_offers"] = r.validation_offers;
  j["final_loss"] = r.history.back().loss;
  if (r.history.back().recall_at_1) j["validation_R@1"] = *r.history.back().recall_at_1;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_embed(const std::string& corpus_path, const std::string& head_path, const std::string& out, bool raw) {
  const Corpus c = ingest_offers(corpus_path);
  CorpusEmbeddings e;
  if (raw) {
    e = embed_corpus_raw(c, fit_layout(c, ModalityMask{}));
  } else {
    e = embed_corpus(c, load_head(head_path));
  }
  const fs::path dst = out.empty() ? fs::path(corpus_path).replace_extension(".emb.mfeb") : fs::path(out);
  write_embedding_table(dst, to_table(e));
  std::cout << nlohmann::ordered_json{{"embeddings", dst.string()}, {"rows", e.keys.size()}, {"dim", e.vectors.cols()}}.dump(2)
            << '\n';
  return 0;
}

int cmd_index(const std::string& corpus_path, const std::string& emb_path, const std::string& out) {
  const Corpus c = ingest_offers(corpus_path);
  const fs::path emb = emb_path.empty() ? fs::path(corpus_path).replace_extension(".emb.mfeb") : fs::path(emb_path);
  const MatchIndex index = build_index(load_corpus_embeddings(emb, c), c);
  const fs::path dst(out);
  const fs::path base = dst.has_parent_path() ? dst.parent_path() : fs::path(".");
  nlohmann::ordered_json j;
  j["format"] = "prodmatch-index/v1";
  j["corpus"] = fs::relative(fs::absolute(corpus_path), fs::absolute(base)).string();
  j["embeddings"] = fs::relative(fs::absolute(emb), fs::absolute(base)).string();
  j["entries"] = index.size();
  j["dim"] = index.dim();
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [brand, members] : index.brand_groups()) groups[brand] = members.size();
  j["brand_groups"] = groups;
  write_json_file(dst, j);
  std::cout << nlohmann::ordered_json{{"index", dst.string()}, {"entries", index.size()}, {"brand_groups", groups.size()}}.dump(2)
            << '\n';
  return 0;
}

int cmd_match(const std::string& index_spec, const std::string& query_spec, const RetrievalParams& params,
              const std::string& out) {
  const EmbeddedCorpus index_data = load_embedded(index_spec);
  const EmbeddedCorpus query_data = load_embedded(query_spec);
  const MatchIndex index = build_index(index_data.embeddings, index_data.corpus);
  const MatchRun run = match_domains(query_data.corpus, query_data.embeddings, index, params);
  write_predictions(out, run.predictions);
  nlohmann::ordered_json j;
  j["predictions"] = run.predictions.size();
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : run.failures) j["failures"].push_back({{"query", f.query_key.str()}, {"reason", f.reason}});
  std::cout << j.dump(2) << '\n';
  return run.failures.empty() ? 0 : 3;
}

int cmd_eval(const std::string& pred_path, const std::vector<std::string>& corpora, const std::string& ks,
             const std::string& out, const std::string& plot, std::optional<double> target_precision,
             std::size_t min_category) {
  const auto preds = read_predictions(pred_path);
  std::vector<Offer> all;
  for (const auto& c : corpora) {
    const Corpus part = ingest_offers(c);
    all.insert(all.end(), part.offers().begin(), part.offers().end());
  }
  const Corpus combined(std::move(all));
  std::set<std::string> index_domains;
  for (const auto& p : preds)
    for (const auto& c : p.candidates) index_domains.insert(c.index_key.domain);
  const Corpus queries = combined.filter([&](const Offer& o) { return !index_domains.contains(o.domain); });
  const Corpus index = combined.filter([&](const Offer& o) { return index_domains.contains(o.domain); });
  const GroundTruth gt = ground_truth(queries, index);
  const auto k_list = parse_ks(ks);
  EvalReport report = evaluate(preds, gt, k_list);
  report.per_category = per_category_report(
      preds, gt,
      [&](const OfferKey& k) {
        const Offer* o = combined.find(k);
        return o ? o->category : kUnknownCategory;
      },
      k_list, min_category);
  nlohmann::ordered_json j = to_json(report);
  if (target_precision) {
    const auto t = threshold_for_precision(report.curve, *target_precision);
    nlohmann::ordered_json sel;
    sel["target_precision"] = *target_precision;
    if (t) {
      const PRPoint p = point_at_threshold(report.curve, *t);
      sel["distance_threshold"] = *t;
      sel["similarity"] = 1.0 - *t;
      sel["precision"] = p.precision;
      sel["recall"] = p.recall;
    } else {
      sel["distance_threshold"] = nullptr;
    }
    j["threshold_selection"] = sel;
  }
  write_json_file(out, j);
  if (!plot.empty()) {
    std::map<std::string, const EvalReport*> series{{"all", &report}};
    for (const auto& [name, sub] : report.per_category) series.emplace(name, &sub);
    std::ofstream(plot, std::ios::trunc) << pr_chart_svg(series);
  }
  nlohmann::ordered_json summary = to_json(report, false);
  summary.erase("per_category");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

struct SimulateArgs {
  std::size_t synthetic_rows = 0;
  double input_precision = 0.162;
  std::string predictions;
  std::vector<std::string> corpora;
  double tpr = 0.794;
  double fpr = 0.018;
  std::optional<double> vote_accuracy_pos, vote_accuracy_neg;
  std::string rule = "majority";
  std::string store;
  std::uint64_t seed = 7;
  std::string out;
  double review_from = -1.0;
  double auto_accept_from = 2.0;
};

int cmd_hitl_simulate(const SimulateArgs& a) {
  std::vector<ValidationRow> drafts;
  if (a.synthetic_rows > 0) {
    drafts = synthetic_rows(a.synthetic_rows, a.input_precision, Rng::derive(a.seed, 1));
  } else {
    if (a.predictions.empty() || a.corpora.size() != 2)
      throw ConfigError("hitl-simulate needs --synthetic-rows, or --predictions with --corpora QUERY INDEX");
    const Corpus queries = ingest_offers(a.corpora[0]);
    const Corpus index = ingest_offers(a.corpora[1]);
    EnqueuePolicy policy;
    policy.review_from = a.review_from;
    policy.auto_accept_from = a.auto_accept_from;
    drafts = rows_for_predictions(read_predictions(a.predictions), policy, corpus_snapshots(queries, index),
                                  corpus_truth(queries, index));
    std::erase_if(drafts, [](const ValidationRow& r) { return !r.truth; });
  }
  StoreOptions so;
  so.rule = aggregation_rule_from_string(a.rule);
  so.bootstrap_seed = Rng::derive(a.seed, 3);
  HitlStore store = a.store.empty() ? HitlStore(so) : HitlStore::open(a.store, so);
  const std::vector<ValidationRow> rows = store.add_rows(std::move(drafts));

  VoteAccuracy acc = calibrate_vote_accuracy(a.tpr, a.fpr);
  if (a.vote_accuracy_pos) acc.positive = *a.vote_accuracy_pos;
  if (a.vote_accuracy_neg) acc.negative = *a.vote_accuracy_neg;
  const auto votes = simulate_validators(rows, acc, Rng::derive(a.seed, 2));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t v = 0; v < votes[i].size(); ++v)
      store.record_vote(rows[i].row_id, "sim-" + std::to_string(v + 1), votes[i][v]);
  store.flush();

  nlohmann::ordered_json j;
  j["seed"] = a.seed;
  j["vote_accuracy"] = {{"positive", acc.positive}, {"negative", acc.negative}};
  j["rows_simulated"] = rows.size();
  j["stats"] = store.stats();
  if (!a.out.empty()) write_json_file(a.out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& host_override, int port_override,
              const std::string& store_override, bool expose_truth) {
  AppConfig cfg = load_app_config(config_path);
  if (!host_override.empty()) cfg.host = host_override;
  if (port_override >= 0) cfg.port = port_override;
  const fs::path store_dir = store_override.empty() ? cfg.resolve(cfg.output_dir) / "hitl" : fs::path(store_override);

  // Signals are handled on a dedicated thread so shutdown runs outside a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  StoreOptions so;
  so.rule = cfg.aggregation;
  so.p_model = cfg.p_model;
  so.bootstrap_seed = cfg.seed;
  HitlStore store = [&] {
    try {
      return HitlStore::open(store_dir, so);
    } catch (const FormatError& e) {
      std::cerr << "refusing to start: corrupt event log: " << e.what() << '\n';
      std::exit(4);
    }
  }();

  ServiceOptions opts;
  opts.expose_truth = expose_truth || cfg.experiment_mode;
  opts.match_job = make_match_job(cfg, store);
  ValidationService service(store, opts);
  const fs::path preds = cfg.resolve(cfg.output_dir) / "predictions.jsonl";
  if (fs::exists(preds)) service.set_matches(read_predictions(preds));

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  std::cerr << "prodmatch " << PRODMATCH_VERSION << " serving on " << cfg.host << ':' << cfg.port << " (store "
            << store_dir.string() << ", " << store.size() << " rows)\n";
  const bool ok = service.listen(cfg.host, cfg.port);
  if (!ok) {
    std::cerr << "cannot bind " << cfg.host << ':' << cfg.port << '\n';
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 5;
  }
  waiter.join();
  store.flush();
  std::cerr << "shut down cleanly\n";
  return 0;
}

int cmd_pipeline(const std::string& config_path) {
  const AppConfig cfg = load_app_config(config_path);
  std::cout << run_pipeline(cfg).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prodmatch: multi-modal product matching"};
  app.set_version_flag("--version", std::string(PRODMATCH_VERSION));
  app.require_subcommand(1);

  std::string config, out, corpus, validation, head, history, embeddings, index, query, predictions, plot, store;
  std::optional<std::uint64_t> seed;
  bool sidecars = true, raw = false, expose_truth = false;
  std::string ks = "1,3";
  std::optional<double> target_precision;
  std::size_t min_category = 1;
  RetrievalParams params;
  std::vector<std::string> corpora;
  SimulateArgs sim;
  std::string host;
  int port = -1;

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth->add_option("--config", config, "SynthConfig JSON (defaults when omitted)");
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--seed", seed, "override the config seed");

  auto* ingest = app.add_subcommand("ingest", "validate an offers JSONL file and print a summary");
  ingest->add_option("--corpus", corpus, "offers JSONL")->required();
  ingest->add_option("--out", out, "rewrite the corpus here");
  ingest->add_flag("!--inline", sidecars, "write embeddings inline instead of sidecar files");

  auto* trn = app.add_subcommand("train", "train a projection head");
  trn->add_option("--corpus", corpus, "training offers JSONL")->required();
  trn->add_option("--validation", validation, "validation offers (default: seeded split of --corpus)");
  trn->add_option("--config", config, "TrainConfig JSON");
  trn->add_option("--out", out, "head file to write")->required();
  trn->add_option("--history", history, "history CSV (default: <out>.history.csv)");

  auto* embed = app.add_subcommand("embed", "embed a corpus with a head");
  embed->add_option("--corpus", corpus, "offers JSONL")->required();
  embed->add_option("--head", head, "head file");
  embed->add_option("--out", out, "embedding file (default: <corpus>.emb.mfeb)");
  embed->add_flag("--raw", raw, "normalized fused vectors, no head");

  auto* idx = app.add_subcommand("index", "build and describe a match index");
  idx->add_option("--corpus", corpus, "index offers JSONL")->required();
  idx->add_option("--embeddings", embeddings, "embedding file (default: <corpus>.emb.mfeb)");
  idx->add_option("--out", out, "index manifest JSON")->required();

  auto* match = app.add_subcommand("match", "retrieve match candidates for query offers");
  match->add_option("--index", index, "EMB+CORPUS, index manifest, or corpus")->required();
  match->add_option("--query", query, "EMB+CORPUS or corpus")->required();
  match->add_option("--k", params.k, "neighbors per query")->check(CLI::PositiveNumber);
  match->add_option("--brand-sim", params.brand_threshold, "Jaro-Winkler blocking threshold (0 disables)")
      ->check(CLI::Range(0.0, 1.0));
  match->add_option("--dist-threshold", params.distance_threshold, "accept candidates with distance <= this")
      ->check(CLI::Range(0.0, 2.0));
  match->add_option("--out", out, "predictions JSONL")->required();

  auto* ev = app.add_subcommand("eval", "R@k, PR curve and AUCPR of predictions");
  ev->add_option("--predictions", predictions, "predictions JSONL")->required();
  ev->add_option("--corpus", corpora, "labeled corpora (query and index)")->required();
  ev->add_option("--k", ks, "comma-separated k values");
  ev->add_option("--out", out, "report JSON")->required();
  ev->add_option("--plot", plot, "also write an SVG PR chart");
  ev->add_option("--target-precision", target_precision, "report the loosest threshold reaching this precision");
  ev->add_option("--min-category", min_category, "pool categories with fewer matched queries into 'other'");

  auto* hs = app.add_subcommand("hitl-simulate", "simulate validators and estimate the confusion matrix");
  hs->add_option("--synthetic-rows", sim.synthetic_rows, "generate this many labeled rows");
  hs->add_option("--input-precision", sim.input_precision, "share of synthetic rows showing a true match");
  hs->add_option("--predictions", sim.predictions, "predictions JSONL to route to validators");
  hs->add_option("--corpora", corpora, "query corpus then index corpus")->expected(2);
  hs->add_option("--tpr", sim.tpr, "target row-level TPR for vote calibration");
  hs->add_option("--fpr", sim.fpr, "target row-level FPR for vote calibration");
  hs->add_option("--vote-accuracy-pos", sim.vote_accuracy_pos, "per-vote accuracy on true-match rows");
  hs->add_option("--vote-accuracy-neg", sim.vote_accuracy_neg, "per-vote accuracy on non-match rows");
  hs->add_option("--rule", sim.rule, "majority | unanimous | any_positive");
  hs->add_option("--store", sim.store, "persist rows and votes in this directory");
  hs->add_option("--seed", sim.seed, "seed");
  hs->add_option("--review-from", sim.review_from, "lowest top-1 similarity routed to validators");
  hs->add_option("--auto-accept-from", sim.auto_accept_from, "top-1 similarity accepted without review");
  hs->add_option("--out", sim.out, "report JSON");

  auto* serve = app.add_subcommand("serve", "host the validation API");
  serve->add_option("--config", config, "AppConfig JSON")->required();
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  serve->add_option("--store", store, "store directory (default: <output_dir>/hitl)");
  serve->add_flag("--expose-truth", expose_truth, "include ground truth in row payloads");

  auto* pipe = app.add_subcommand("pipeline", "run train/encode/index/match/eval/enqueue from a config");
  pipe->add_option("--config", config, "AppConfig JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(config, out, seed);
    if (*ingest) return cmd_ingest(corpus, out, sidecars);
    if (*trn) return cmd_train(corpus, validation, config, out, history);
    if (*embed) {
      if (!raw && head.empty()) throw ConfigError("embed needs --head or --raw");
      return cmd_embed(corpus, head, out, raw);
    }
    if (*idx) return cmd_index(corpus, embeddings, out);
    if (*match) return cmd_match(index, query, params, out);
    if (*ev) return cmd_eval(predictions, corpora, ks, out, plot, target_precision, min_category);
    if (*hs) {
      sim.corpora = corpora;
      return cmd_hitl_simulate(sim);
    }
    if (*serve) return cmd_serve(config, host, port, store, expose_truth);
    if (*pipe) return cmd_pipeline(config);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

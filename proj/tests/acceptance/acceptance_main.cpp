// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails. Tolerances and protocols are pinned here.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "prodmatch/app/pipeline.hpp"
#include "prodmatch/hitl/service.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace prodmatch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

// ---------------------------------------------------------------- HITL

Outcome hitl_formula() {
  const double lr = lr_plus(0.794, 0.018);
  const double p = predict_hitl_precision(0.285, 44.1);
  const auto t0 = Clock::now();
  double sink = 0.0;
  for (int i = 0; i < 1000; ++i) sink += predict_hitl_precision(0.285 + 1e-9 * i, 44.1);
  const double per_call_ms = seconds_since(t0) * 1000.0 / 1000.0;
  const bool pass = p >= 0.940 && p <= 0.952 && std::abs(lr - 44.1) < 0.05 && per_call_ms < 1.0 && sink > 0.0;
  return {pass, "P_hitl(0.285, 44.1) = " + fmt(p) + " in [0.940, 0.952], LR+(0.794, 0.018) = " + fmt(lr, 2) +
                    ", " + fmt(per_call_ms * 1000.0, 3) + " us/call"};
}

Outcome hitl_simulation() {
  const auto t0 = Clock::now();
  constexpr std::size_t kRows = 14453;
  constexpr std::uint64_t kSeed = 7;
  HitlStore store;
  const auto rows = store.add_rows(synthetic_rows(kRows, 0.162, Rng::derive(kSeed, 1)));
  const VoteAccuracy acc = calibrate_vote_accuracy(0.794, 0.018);
  const auto votes = simulate_validators(rows, acc, Rng::derive(kSeed, 2));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t v = 0; v < votes[i].size(); ++v)
      store.record_vote(rows[i].row_id, "sim-" + std::to_string(v + 1), votes[i][v]);
  const auto stats = store.stats();
  const double out = stats["output_precision"];
  const double predicted = stats["predicted_precision"];
  const double tpr = stats["confusion"]["TPR"], fpr = stats["confusion"]["FPR"];
  const std::size_t wrong = stats["confusion"]["counts"]["wrong_candidate"];
  const double gap = std::abs(out - predicted);
  const double t = seconds_since(t0);
  const bool pass = std::abs(out - 0.896) <= 0.01 && gap <= 1e-12 && wrong == 0 && t < 10.0;
  return {pass, std::to_string(kRows) + " rows: TPR " + fmt(tpr) + ", FPR " + fmt(fpr) + ", output precision " +
                    fmt(out) + " (target 0.896 +- 0.01), |empirical - formula| = " + sci(gap) + ", " +
                    fmt(t, 2) + " s"};
}

// ---------------------------------------------------------------- loss

Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + gen() % 17;  // batch <= 20
    FusionLayout layout;
    layout.image_dim = 1 + gen() % 8;
    layout.text_dim = 1 + gen() % 8;  // d <= 16
    layout.mask = {true, true, false};
    const std::size_t out_dim = 2 + gen() % 7;
    const bool hidden = t % 5 == 4;
    const ProjectionHead head = ProjectionHead::create(layout, out_dim, hidden, 1000 + static_cast<std::uint64_t>(t));
    InputBatch batch;
    batch.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(layout.input_dim()));
    for (Eigen::Index i = 0; i < batch.inputs.size(); ++i) batch.inputs.data()[i] = normal(gen);
    for (std::size_t i = 0; i < n; ++i) batch.labels.push_back(static_cast<std::int64_t>(gen() % (1 + n / 3)));
    batch.labels[1] = batch.labels[0];
    const double tau = t % 2 ? 0.06 : 0.5;
    const HeadGradient g = supcon_gradient(batch, head, tau);
    const auto numeric = oracle::numeric_gradient(head, batch, tau);
    const auto blocks = g.blocks();
    if (blocks.size() != numeric.size()) return {false, "gradient block layout differs"};
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t i = 0; i < blocks[b].size(); ++i) {
        const double a = blocks[b][i], num = numeric[b][i];
        worst = std::max(worst, std::abs(a - num) / std::max(std::abs(a) + std::abs(num), 1e-8));
      }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 30.0, "50 heads, max relative error " + sci(worst) + " (< 1e-4), " + fmt(t, 2) + " s"};
}

Outcome loss_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(777);
  double worst = 0.0;
  std::size_t with_lone = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 4 + gen() % 60;
    const auto b = fixture::random_batch(gen, n, 2 + gen() % 15, 1 + n / 2);
    const auto lones = std::count_if(b.labels.begin(), b.labels.end(),
                                     [&](std::int64_t l) { return std::count(b.labels.begin(), b.labels.end(), l) == 1; });
    with_lone += lones > 0;
    const double tau = t % 2 ? 0.06 : 0.3;
    for (bool drop : {false, true}) {
      const double got = supcon_loss(b, tau, {.exclude_lone_from_denominator = drop, .tile_rows = 1 + gen() % 32});
      const double want = static_cast<double>(oracle::supcon(b.embeddings, b.labels, tau, drop));
      worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
    }
  }
  // Dropping lone members from the denominators equals deleting them.
  std::size_t identity_failures = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 4 + gen() % 300;
    const auto b = fixture::random_batch(gen, n, 2 + gen() % 63, n);
    EmbeddingBatch reduced;
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n; ++i)
      if (std::count(b.labels.begin(), b.labels.end(), b.labels[i]) > 1) {
        keep.push_back(static_cast<Eigen::Index>(i));
        reduced.labels.push_back(b.labels[i]);
      }
    reduced.embeddings = b.embeddings(keep, Eigen::all);
    identity_failures +=
        supcon_loss(reduced, 0.06) != supcon_loss(b, 0.06, {.exclude_lone_from_denominator = true});
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-10 && identity_failures == 0 && with_lone > 0 && t < 10.0,
          "100 batches (" + std::to_string(with_lone) + " with lone members), max relative error " + sci(worst) +
              " (<= 1e-10); lone deletion identity bit-exact on " + std::to_string(100 - identity_failures) +
              "/100; " + fmt(t, 2) + " s"};
}

// ---------------------------------------------------------------- training

double validation_aucpr(const SynthCorpus& data, const ProjectionHead& head) {
  const auto preds = cross_domain_neighbors(embed_corpus(data.validation, head), data.validation, 3);
  return evaluate(preds, ground_truth(data.validation), {1, 3}).aucpr;
}

double cross_recall(const Corpus& queries, const Corpus& index, const CorpusEmbeddings& qe,
                    const CorpusEmbeddings& ie) {
  const MatchRun run = match_domains(queries, qe, build_index(ie, index), {1, 0.0, 2.0});
  return recall_at_k(run.predictions, ground_truth(queries, index), 1);
}

Outcome trained_vs_raw() {
  const auto t0 = Clock::now();
  const SynthCorpus data = generate(SynthConfig{});
  const FusionLayout layout = fit_layout(data.train, ModalityMask{});
  const GroundTruth gt_val = ground_truth(data.validation);
  const double raw_val =
      recall_at_k(cross_domain_neighbors(embed_corpus_raw(data.validation, layout), data.validation, 1), gt_val, 1);
  const auto raw_index = embed_corpus_raw(data.test_index, layout);
  const double raw_out =
      cross_recall(data.test_out_query, data.test_index, embed_corpus_raw(data.test_out_query, layout), raw_index);

  TrainConfig tc;
  tc.batch_size = 256;
  tc.epochs = 100;
  tc.seed = 7;
  const TrainResult r = train(data.train, data.validation, tc);
  const double val =
      recall_at_k(cross_domain_neighbors(embed_corpus(data.validation, r.head), data.validation, 1), gt_val, 1);
  const auto index = embed_corpus(data.test_index, r.head);
  const double out = cross_recall(data.test_out_query, data.test_index, embed_corpus(data.test_out_query, r.head), index);
  const double t = seconds_since(t0);
  const double gain = val - raw_val;
  const bool pass = gain >= 0.10 && out > raw_out && t < 300.0;
  return {pass, "in-domain validation R@1 " + fmt(raw_val) + " -> " + fmt(val) + " (gain " + fmt(100 * gain, 1) +
                    " points, need >= 10); out-domain R@1 " + fmt(raw_out) + " -> " + fmt(out) + "; " + fmt(t, 1) + " s"};
}

// Image-only head, 64 dimensions, 400 epochs: long enough for the largest
// batch to converge in the step budget it gets.
TrainConfig ablation_config(std::uint64_t seed, std::size_t batch, double lone_share) {
  TrainConfig tc;
  tc.seed = seed;
  tc.batch_size = batch;
  tc.epochs = 400;
  tc.output_dim = 64;
  tc.modalities = {true, false, false};
  tc.lone_negative_share = lone_share;
  return tc;
}

SynthCorpus ablation_corpus(std::uint64_t seed) {
  SynthConfig sc;
  sc.seed = seed;
  return generate(sc);
}

Outcome lone_negative_ablation() {
  const auto t0 = Clock::now();
  std::vector<double> share0, share1, share1_fixed;
  std::string per_seed;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const SynthCorpus data = ablation_corpus(s);
    // With share 1 the batch grows by 1/(1 - lone fraction) so it carries the
    // same expected number of positive pairs as the share-0 batch of 256.
    const double lone_fraction = static_cast<double>(lone_offers(data.train).size()) / static_cast<double>(data.train.size());
    const auto batch1 = static_cast<std::size_t>(std::llround(256.0 / (1.0 - lone_fraction)));
    share0.push_back(validation_aucpr(data, train(data.train, data.validation, ablation_config(s, 256, 0.0)).head));
    share1.push_back(validation_aucpr(data, train(data.train, data.validation, ablation_config(s, batch1, 1.0)).head));
    // Context only: share 1 at the same batch size, where removing lones
    // also raises the number of positive pairs per batch.
    share1_fixed.push_back(validation_aucpr(data, train(data.train, data.validation, ablation_config(s, 256, 1.0)).head));
    per_seed += " seed" + std::to_string(s) + " " + fmt(share0.back()) + "/" + fmt(share1.back()) + " (batch " +
                std::to_string(batch1) + ")";
  }
  const double m0 = median3(share0), m1 = median3(share1);
  const double t = seconds_since(t0);
  return {m0 >= m1 && t < 900.0, "median validation AUCPR share0 " + fmt(m0) + " vs share1 " + fmt(m1) +
                                     " (need >=);" + per_seed + "; share1 at batch 256: " +
                                     fmt(median3(share1_fixed)) + "; " + fmt(t, 1) + " s"};
}

Outcome batch_size_sweep() {
  const auto t0 = Clock::now();
  std::vector<double> small, large;
  std::string per_seed;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const SynthCorpus data = ablation_corpus(s);
    small.push_back(validation_aucpr(data, train(data.train, data.validation, ablation_config(s, 256, 0.0)).head));
    large.push_back(validation_aucpr(data, train(data.train, data.validation, ablation_config(s, 4096, 0.0)).head));
    per_seed += " seed" + std::to_string(s) + " " + fmt(small.back()) + "/" + fmt(large.back());
  }
  const double ms = median3(small), ml = median3(large);
  const double t = seconds_since(t0);
  return {ml >= ms && t < 900.0, "median validation AUCPR batch4096 " + fmt(ml) + " vs batch256 " + fmt(ms) +
                                     " (need >=);" + per_seed + "; " + fmt(t, 1) + " s"};
}

// ---------------------------------------------------------------- retrieval

Outcome retrieval_exactness() {
  const auto t0 = Clock::now();
  const SynthCorpus data = generate(SynthConfig{});
  const FusionLayout layout = fit_layout(data.train, ModalityMask{});
  const CorpusEmbeddings ie = embed_corpus_raw(data.test_index, layout);
  const MatchIndex index = build_index(ie, data.test_index);

  std::mt19937_64 gen(4242);
  std::normal_distribution<double> normal;
  std::vector<Offer> qs;
  CorpusEmbeddings qe;
  qe.vectors.resize(1000, static_cast<Eigen::Index>(index.dim()));
  for (std::size_t i = 0; i < 1000; ++i) {
    const Offer& like = data.test_index[gen() % data.test_index.size()];
    Offer q = fixture::offer("probe", "q" + std::to_string(i), std::nullopt, {1.0}, {1.0}, like.brand_raw);
    qs.push_back(q);
    qe.keys.push_back(q.key());
    auto row = qe.vectors.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index c = 0; c < row.size(); ++c) row[c] = normal(gen);
    row.normalize();
  }
  const Corpus queries(std::move(qs));
  std::size_t mismatches = 0, compared = 0;
  double worst_distance = 0.0;
  for (std::size_t k : {1u, 10u}) {
    const MatchRun run = match_domains(queries, qe, index, {k, 0.0, 2.0});
    if (run.predictions.size() != 1000 || !run.failures.empty()) return {false, "retrieval dropped queries"};
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto want = oracle::knn(qe.vectors.row(static_cast<Eigen::Index>(i)).transpose(), ie, k);
      const auto& got = run.predictions[i].candidates;
      if (got.size() != want.size()) {
        ++mismatches;
        continue;
      }
      for (std::size_t c = 0; c < got.size(); ++c) {
        ++compared;
        mismatches += !(got[c].index_key == want[c].key);
        worst_distance = std::max(worst_distance, std::abs(got[c].distance - want[c].distance));
      }
    }
  }

  // AUCPR on a real run and on heavily tied random runs.
  const CorpusEmbeddings qin = embed_corpus_raw(data.test_in_query, layout);
  const MatchRun real = match_domains(data.test_in_query, qin, index, {3, 0.0, 2.0});
  const GroundTruth gt = ground_truth(data.test_in_query, data.test_index);
  double auc_gap = std::abs(aucpr(pr_curve(real.predictions, gt)) - oracle::aucpr(real.predictions, gt));
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 20; ++t) {
    std::vector<MatchPrediction> preds;
    GroundTruth g;
    for (int q = 0; q < 300; ++q) {
      MatchPrediction p;
      p.query_key = {"q", std::to_string(q)};
      const bool matched = u(gen) < 0.7;
      g[p.query_key] = matched ? std::set<OfferKey>{{"i", std::to_string(q)}} : std::set<OfferKey>{};
      Candidate c;
      c.index_key = {"i", u(gen) < 0.6 ? std::to_string(q) : "z" + std::to_string(q)};
      c.distance = std::round(u(gen) * 25.0) / 25.0;
      p.candidates.push_back(c);
      preds.push_back(p);
    }
    auc_gap = std::max(auc_gap, std::abs(aucpr(pr_curve(preds, g)) - oracle::aucpr(preds, g)));
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && worst_distance <= 1e-12 && auc_gap <= 1e-12 && t < 30.0,
          "1000 queries at k=1 and k=10: " + std::to_string(compared - mismatches) + "/" + std::to_string(compared) +
              " candidates identical to brute force (max distance gap " + sci(worst_distance) +
              "); AUCPR gap " + sci(auc_gap) + " (<= 1e-12); " + fmt(t, 2) + " s"};
}

// ---------------------------------------------------------------- determinism

Outcome determinism() {
  const auto t0 = Clock::now();
  fixture::TempDir dir;
  std::array<std::string, 2> reports, predictions;
  for (int run = 0; run < 2; ++run) {
    std::filesystem::remove_all(dir / "data");
    std::filesystem::remove_all(dir / "run");
    const SynthConfig sc;
    write_synth_corpus(dir / "data", generate(sc), sc);
    AppConfig c;
    c.data_dir = (dir / "data").string();
    c.output_dir = (dir / "run").string();
    c.corpus = {"train.jsonl", "validation.jsonl", "test_index.jsonl", "test_in_query.jsonl"};
    c.train = true;
    c.training.batch_size = 256;
    c.training.epochs = 20;
    c.experiment_mode = true;
    c.hitl.review_from = 0.5;
    run_pipeline(c);
    reports[static_cast<std::size_t>(run)] = fixture::read_file(dir / "run" / "run_report.json");
    predictions[static_cast<std::size_t>(run)] = fixture::read_file(dir / "run" / "predictions.jsonl");
  }
  const double t = seconds_since(t0);
  const bool same = !reports[0].empty() && reports[0] == reports[1] && predictions[0] == predictions[1];
  return {same, "two synth + pipeline runs: run_report.json " + std::to_string(reports[0].size()) + " bytes, " +
                    (reports[0] == reports[1] ? "identical" : "DIFFERENT") + "; predictions " +
                    (predictions[0] == predictions[1] ? "identical" : "DIFFERENT") + "; " + fmt(t, 1) + " s"};
}

// ---------------------------------------------------------------- durability

ValidationRow draft(std::size_t i) {
  ValidationRow r;
  const std::string q = "q" + std::to_string(i);
  r.query = {{"shopB", q}, "Brand", "title " + q, {"img/" + q}, std::nullopt};
  for (int c = 0; c < 3; ++c) r.candidates.push_back(key_only_snapshot({"shopA", q + "-" + std::to_string(c)}));
  r.truth = static_cast<Choice>(i % 4);
  return r;
}

// Op 4k adds row k+1; ops 4k+1..4k+3 are its three votes.
void apply_op(HitlStore& store, std::size_t i) {
  const std::size_t row = i / 4, slot = i % 4;
  if (slot == 0)
    store.add_rows({draft(row)});
  else
    store.record_vote(row + 1, "v" + std::to_string(slot), static_cast<Choice>((row * 3 + slot) % 4));
}

Outcome kill_and_replay(std::string& detail) {
  std::mt19937_64 gen(99);
  std::size_t trials = 0, exact = 0, total_acked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    fixture::TempDir dir;
    int fds[2];
    if (::pipe(fds) != 0) return {false, "pipe failed"};
    const pid_t pid = ::fork();
    if (pid < 0) return {false, "fork failed"};
    if (pid == 0) {
      ::close(fds[0]);
      auto store = HitlStore::open(dir.path());
      for (std::size_t i = 0;; ++i) {
        apply_op(store, i);
        if (i % 97 == 96) store.compact();
        const std::uint64_t seq = store.last_seq();
        if (::write(fds[1], &seq, sizeof seq) != sizeof seq) break;
      }
      ::_exit(0);
    }
    ::close(fds[1]);
    const std::uint64_t target = 1 + gen() % 2000;
    std::uint64_t acked = 0, seq = 0;
    while (acked < target && ::read(fds[0], &seq, sizeof seq) == sizeof seq) acked = seq;
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    ::close(fds[0]);

    ++trials;
    total_acked += acked;
    auto recovered = HitlStore::open(dir.path());
    HitlStore reference;
    for (std::size_t i = 0; reference.last_seq() < recovered.last_seq(); ++i) apply_op(reference, i);
    exact += recovered.last_seq() >= acked && recovered == reference;
  }
  detail = std::to_string(exact) + "/" + std::to_string(trials) + " SIGKILL trials replayed exactly (" +
           std::to_string(total_acked) + " acknowledged events)";
  return {exact == trials, detail};
}

Outcome durability() {
  const auto t0 = Clock::now();
  std::string kill_detail;
  const Outcome killed = kill_and_replay(kill_detail);

  std::mt19937_64 gen(1234);
  std::size_t agree = 0, status_mismatch = 0, votes = 0;
  constexpr int kSequences = 1000;
  for (int s = 0; s < kSequences; ++s) {
    HitlStore via_api, via_lib;
    const std::size_t n_rows = 1 + gen() % 4;
    std::vector<ValidationRow> drafts;
    for (std::size_t r = 0; r < n_rows; ++r) drafts.push_back(draft(r + 10 * static_cast<std::size_t>(s)));
    via_api.add_rows(drafts);
    via_lib.add_rows(drafts);
    ValidationService service(via_api);
    const int port = service.bind_any("127.0.0.1");
    std::thread server([&] { service.listen_after_bind(); });
    service.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    const std::size_t n_votes = 1 + gen() % 16;
    for (std::size_t v = 0; v < n_votes; ++v) {
      const std::uint64_t row = 1 + gen() % (n_rows + 1);  // one past the end: 404
      const std::string who = "v" + std::to_string(gen() % 5);
      const int choice = static_cast<int>(gen() % 5);  // 4 is invalid
      int lib_status = 200;
      try {
        via_lib.record_vote(row, who, static_cast<Choice>(choice));
      } catch (const NotFoundError&) {
        lib_status = 404;
      } catch (const ConflictError&) {
        lib_status = 409;
      } catch (const DomainError&) {
        lib_status = 400;
      }
      const auto res = client.Post("/validation/" + std::to_string(row) + "/vote",
                                   nlohmann::json{{"validator", who}, {"choice", choice}}.dump(), "application/json");
      ++votes;
      status_mismatch += !res || res->status != lib_status;
    }
    const auto api_stats = client.Get("/validation/stats");
    const bool stats_same = api_stats && nlohmann::json::parse(api_stats->body) == nlohmann::json(via_lib.stats());
    service.stop();
    server.join();
    agree += via_api == via_lib && stats_same;
  }
  const double t = seconds_since(t0);
  return {killed.pass && agree == kSequences && status_mismatch == 0,
          kill_detail + "; API vs library: " + std::to_string(agree) + "/" + std::to_string(kSequences) +
              " sequences with equal state and stats, " + std::to_string(status_mismatch) + "/" +
              std::to_string(votes) + " status mismatches; " + fmt(t, 1) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 hitl-formula", hitl_formula},
      {"AC2 hitl-simulation", hitl_simulation},
      {"AC3 gradient-vs-finite-differences", gradient_check},
      {"AC4 loss-vs-oracle", loss_oracle},
      {"AC5 trained-vs-raw-retrieval", trained_vs_raw},
      {"AC6 lone-negative-ablation", lone_negative_ablation},
      {"AC7 batch-size-sweep", batch_size_sweep},
      {"AC8 retrieval-exactness", retrieval_exactness},
      {"AC9 determinism", determinism},
      {"AC10 service-durability", durability},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}

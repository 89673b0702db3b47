#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/hitl/confusion.hpp"
#include "prodmatch/hitl/precision.hpp"
#include "prodmatch/hitl/rows.hpp"
#include "prodmatch/retrieval/prediction.hpp"

namespace prodmatch {

/// Which predictions go to humans. A query whose top similarity lies in
/// [review_from, auto_accept_from) becomes a row; above is accepted without
/// review, below is rejected.
struct EnqueuePolicy {
  double auto_accept_from = 0.95;
  double review_from = 0.80;
  std::size_t judgments_per_row = kDefaultJudgmentsPerRow;

  void validate() const {
    if (!(review_from >= -1.0 && review_from <= auto_accept_from))
      throw ConfigError("hitl policy: review_from must lie in [-1, auto_accept_from]");
    if (judgments_per_row < 1) throw ConfigError("hitl policy: judgments_per_row must be >= 1");
  }

  bool in_band(double similarity) const { return similarity >= review_from && similarity < auto_accept_from; }
};

using SnapshotFn = std::function<OfferSnapshot(const OfferKey&)>;
/// Experiment mode: given the query and the shown candidates, the 1-based
/// position of the true match (0 if none), or nullopt when unlabeled.
using TruthFn = std::function<std::optional<Choice>(const OfferKey&, const std::vector<OfferKey>&)>;

inline OfferSnapshot key_only_snapshot(const OfferKey& key) { return {key, "", "", {}, std::nullopt}; }

/// Draft rows (row_id 0) for the in-band predictions, in input order.
inline std::vector<ValidationRow> rows_for_predictions(const std::vector<MatchPrediction>& predictions,
                                                       const EnqueuePolicy& policy,
                                                       const SnapshotFn& snapshot = key_only_snapshot,
                                                       const TruthFn& truth = nullptr) {
  policy.validate();
  std::vector<ValidationRow> rows;
  for (const auto& p : predictions) {
    if (p.candidates.empty() || !policy.in_band(p.candidates.front().similarity())) continue;
    ValidationRow row;
    row.query = snapshot(p.query_key);
    row.query.similarity.reset();
    std::vector<OfferKey> shown;
    for (const auto& c : p.candidates) {
      if (!c.accepted) continue;
      OfferSnapshot s = snapshot(c.index_key);
      s.similarity = c.similarity();
      row.candidates.push_back(std::move(s));
      shown.push_back(c.index_key);
      if (row.candidates.size() == kMaxShownCandidates) break;
    }
    if (row.candidates.empty()) continue;
    row.judgments_required = policy.judgments_per_row;
    if (truth) row.truth = truth(p.query_key, shown);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct StoreOptions {
  AggregationRule rule = AggregationRule::majority;
  bool fsync_each_event = false;
  /// Input precision used for the predicted P_hitl in stats; when unset the
  /// empirical share of labeled positive rows is used.
  std::optional<double> p_model;
  std::uint64_t bootstrap_seed = 0;
};

/// The mutable vote store: rows, votes, and the append-only event log that
/// makes them durable. Reads share a lock; every write (and its log append)
/// holds it exclusively, so events are serialized.
///
/// Directory layout: events.jsonl (one JSON event per line, seq increasing),
/// snapshot.json (compacted state up to last_seq).
class HitlStore {
 public:
  static constexpr const char* kLogName = "events.jsonl";
  static constexpr const char* kSnapshotName = "snapshot.json";
  static constexpr const char* kSnapshotFormat = "hitl-snapshot/v1";

  /// In-memory store without persistence.
  explicit HitlStore(StoreOptions options = {}) : options_(std::move(options)) {}

  /// Opens (or creates) a persistent store: loads the snapshot, then replays
  /// log events newer than it. A torn final line is discarded; any other
  /// unreadable or inconsistent event is a FormatError naming its line.
  static HitlStore open(const std::filesystem::path& dir, StoreOptions options = {}) {
    HitlStore store(std::move(options));
    std::filesystem::create_directories(dir);
    store.dir_ = dir;
    store.load_snapshot();
    store.replay_log();
    store.open_log();
    return store;
  }

  HitlStore(HitlStore&& other) noexcept { *this = std::move(other); }
  HitlStore& operator=(HitlStore&& other) noexcept {
    if (this != &other) {
      close_log();
      options_ = std::move(other.options_);
      dir_ = std::move(other.dir_);
      rows_ = std::move(other.rows_);
      by_key_ = std::move(other.by_key_);
      pending_ = std::move(other.pending_);
      next_row_id_ = other.next_row_id_;
      last_seq_ = other.last_seq_;
      log_fd_ = other.log_fd_;
      other.log_fd_ = -1;
    }
    return *this;
  }
  HitlStore(const HitlStore&) = delete;
  HitlStore& operator=(const HitlStore&) = delete;
  ~HitlStore() { close_log(); }

  bool persistent() const { return dir_.has_value(); }

  /// Adds draft rows, assigning ids. Rows whose dedup key already exists are
  /// skipped. Returns the rows actually created.
  std::vector<ValidationRow> add_rows(std::vector<ValidationRow> drafts) {
    std::unique_lock lock(mutex_);
    std::vector<ValidationRow> created;
    for (auto& draft : drafts) {
      if (draft.candidates.empty() || draft.candidates.size() > kMaxShownCandidates)
        throw DomainError("a row shows between 1 and 3 candidates");
      if (by_key_.contains(draft.dedup_key())) continue;
      draft.row_id = next_row_id_;
      draft.votes.clear();
      draft.status = RowStatus::pending;
      draft.verdict.reset();
      nlohmann::ordered_json ev;
      ev["seq"] = last_seq_ + 1;
      ev["type"] = "row";
      ev["row"] = to_json(draft, false, true);
      append_event(ev);
      apply_row(draft, last_seq_ + 1);
      created.push_back(draft);
    }
    return created;
  }

  std::vector<ValidationRow> enqueue_predictions(const std::vector<MatchPrediction>& predictions,
                                                 const EnqueuePolicy& policy,
                                                 const SnapshotFn& snapshot = key_only_snapshot,
                                                 const TruthFn& truth = nullptr) {
    return add_rows(rows_for_predictions(predictions, policy, snapshot, truth));
  }

  /// Appends one vote. Completion aggregates the row exactly once.
  ValidationRow record_vote(std::uint64_t row_id, const std::string& validator, Choice choice) {
    std::unique_lock lock(mutex_);
    const ValidationRow& row = checked_vote_target(row_id, validator, choice);
    (void)row;
    nlohmann::ordered_json ev;
    ev["seq"] = last_seq_ + 1;
    ev["type"] = "vote";
    ev["row_id"] = row_id;
    ev["validator"] = validator;
    ev["choice"] = choice;
    append_event(ev);
    apply_vote(row_id, validator, choice, last_seq_ + 1);
    return rows_.at(row_id);
  }

  /// Lowest-id pending row the validator has not voted on.
  std::optional<ValidationRow> next_for(const std::string& validator) const {
    std::shared_lock lock(mutex_);
    for (std::uint64_t id : pending_) {
      const ValidationRow& r = rows_.at(id);
      if (!r.has_voted(validator)) return r;
    }
    return std::nullopt;
  }

  ValidationRow row(std::uint64_t row_id) const {
    std::shared_lock lock(mutex_);
    auto it = rows_.find(row_id);
    if (it == rows_.end()) throw NotFoundError("row " + std::to_string(row_id) + " not found");
    return it->second;
  }

  std::vector<ValidationRow> rows() const {
    std::shared_lock lock(mutex_);
    std::vector<ValidationRow> out;
    out.reserve(rows_.size());
    for (const auto& [id, r] : rows_) out.push_back(r);
    return out;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return rows_.size();
  }

  std::uint64_t last_seq() const {
    std::shared_lock lock(mutex_);
    return last_seq_;
  }

  /// Running counters, plus the confusion estimate and predicted P_hitl when
  /// complete labeled rows of both classes exist.
  nlohmann::ordered_json stats() const {
    std::vector<ValidationRow> all = rows();
    nlohmann::ordered_json j;
    std::size_t complete = 0, votes = 0, unanimous = 0, confirmed = 0;
    for (const auto& r : all) {
      votes += r.votes.size();
      if (!r.complete()) continue;
      ++complete;
      if (r.verdict && *r.verdict != kNoMatch) ++confirmed;
      bool same = true;
      for (const auto& v : r.votes) same = same && v.choice == r.votes.front().choice;
      if (same) ++unanimous;
    }
    j["rows"] = all.size();
    j["pending"] = all.size() - complete;
    j["complete"] = complete;
    j["votes"] = votes;
    j["confirmed"] = confirmed;
    j["agreement_rate"] = complete ? static_cast<double>(unanimous) / static_cast<double>(complete) : 0.0;
    j["aggregation"] = to_string(options_.rule);

    const std::vector<LabeledVerdict> labeled = labeled_verdicts(all, options_.rule);
    j["labeled_rows"] = labeled.size();
    ConfusionCounts counts;
    for (const auto& l : labeled) counts.add(l);
    if (counts.positives() > 0 && counts.negatives() > 0) {
      const ConfusionEstimate e = confusion(labeled, options_.bootstrap_seed);
      j["confusion"] = to_json(e);
      const double p = options_.p_model.value_or(counts.input_precision());
      j["p_model"] = p;
      if (std::isnan(e.lr_plus))
        j["predicted_precision"] = nullptr;
      else
        j["predicted_precision"] = predict_hitl_precision(p, e.lr_plus);
      if (counts.true_positive + counts.false_positive + counts.wrong_candidate > 0)
        j["output_precision"] = counts.output_precision();
    } else {
      j["confusion"] = nullptr;
    }
    return j;
  }

  /// Writes a snapshot of the full state and truncates the log. Safe against
  /// a crash at any point: the snapshot is renamed into place atomically and
  /// replay skips events it already covers.
  void compact() {
    std::unique_lock lock(mutex_);
    if (!dir_) return;
    nlohmann::ordered_json snap;
    snap["format"] = kSnapshotFormat;
    snap["last_seq"] = last_seq_;
    snap["next_row_id"] = next_row_id_;
    snap["rows"] = nlohmann::ordered_json::array();
    for (const auto& [id, r] : rows_) snap["rows"].push_back(to_json(r, true, true));
    const auto tmp = *dir_ / (std::string(kSnapshotName) + ".tmp");
    write_durably(tmp, snap.dump() + "\n");
    std::filesystem::rename(tmp, *dir_ / kSnapshotName);
    close_log();
    std::filesystem::resize_file(*dir_ / kLogName, 0);
    open_log();
  }

  /// Flushes the log to stable storage.
  void flush() {
    std::unique_lock lock(mutex_);
    if (log_fd_ >= 0) ::fsync(log_fd_);
  }

  /// Applies a log file to this store (events with seq <= last_seq are
  /// skipped, so replaying the same log again changes nothing).
  void replay(const std::filesystem::path& log_path) {
    std::unique_lock lock(mutex_);
    replay_file(log_path, false);
  }

  friend bool operator==(const HitlStore& a, const HitlStore& b) {
    std::shared_lock la(a.mutex_), lb(b.mutex_);
    return a.rows_ == b.rows_ && a.next_row_id_ == b.next_row_id_;
  }

 private:
  const ValidationRow& checked_vote_target(std::uint64_t row_id, const std::string& validator, Choice choice) const {
    auto it = rows_.find(row_id);
    if (it == rows_.end()) throw NotFoundError("row " + std::to_string(row_id) + " not found");
    const ValidationRow& row = it->second;
    if (validator.empty()) throw DomainError("validator id must be non-empty");
    if (choice < kNoMatch || choice > static_cast<Choice>(row.candidates.size()))
      throw DomainError("choice " + std::to_string(choice) + " out of range 0.." +
                        std::to_string(row.candidates.size()));
    if (row.complete()) throw ConflictError("row " + std::to_string(row_id) + " is already complete");
    if (row.has_voted(validator))
      throw ConflictError("validator '" + validator + "' already voted on row " + std::to_string(row_id));
    return row;
  }

  void apply_row(ValidationRow row, std::uint64_t seq) {
    if (rows_.contains(row.row_id)) throw ConflictError("row " + std::to_string(row.row_id) + " already exists");
    const std::uint64_t id = row.row_id;
    by_key_.emplace(row.dedup_key(), id);
    if (!row.complete()) pending_.insert(id);
    rows_.emplace(id, std::move(row));
    next_row_id_ = std::max(next_row_id_, id + 1);
    last_seq_ = seq;
  }

  void apply_vote(std::uint64_t row_id, const std::string& validator, Choice choice, std::uint64_t seq) {
    checked_vote_target(row_id, validator, choice);
    ValidationRow& row = rows_.at(row_id);
    row.votes.push_back({validator, choice});
    if (row.votes.size() >= row.judgments_required) {
      row.status = RowStatus::complete;
      row.verdict = aggregate_majority(row, options_.rule);
      pending_.erase(row_id);
    }
    last_seq_ = seq;
  }

  void apply_event(const nlohmann::json& ev) {
    const auto seq = ev.at("seq").get<std::uint64_t>();
    if (seq <= last_seq_) return;
    const auto type = ev.at("type").get<std::string>();
    if (type == "row") {
      ValidationRow row = row_from_json(ev.at("row"));
      row.votes.clear();
      row.status = RowStatus::pending;
      row.verdict.reset();
      apply_row(std::move(row), seq);
    } else if (type == "vote") {
      apply_vote(ev.at("row_id").get<std::uint64_t>(), ev.at("validator").get<std::string>(),
                 ev.at("choice").get<int>(), seq);
    } else {
      throw DomainError("unknown event type '" + type + "'");
    }
  }

  void load_snapshot() {
    const auto path = *dir_ / kSnapshotName;
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path);
    nlohmann::json snap;
    try {
      snap = nlohmann::json::parse(in);
      if (snap.value("format", std::string()) != kSnapshotFormat) throw DomainError("unknown snapshot format");
      for (const auto& rj : snap.at("rows")) {
        ValidationRow r = row_from_json(rj);
        if (r.complete()) r.verdict = aggregate_majority(r, options_.rule);
        apply_row(std::move(r), 0);
      }
      last_seq_ = snap.at("last_seq").get<std::uint64_t>();
      next_row_id_ = std::max(next_row_id_, snap.at("next_row_id").get<std::uint64_t>());
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(path.string(), 0, std::string("corrupt snapshot: ") + e.what());
    }
  }

  void replay_log() {
    const auto path = *dir_ / kLogName;
    if (std::filesystem::exists(path)) replay_file(path, true);
  }

  void replay_file(const std::filesystem::path& path, bool truncate_torn_tail) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string(), 0, "cannot open event log");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    std::size_t pos = 0, line_no = 0, good_end = 0;
    while (pos < data.size()) {
      const std::size_t nl = data.find('\n', pos);
      const bool last = nl == std::string::npos;
      const std::string line = data.substr(pos, last ? std::string::npos : nl - pos);
      ++line_no;
      if (!line.empty()) {
        nlohmann::json ev;
        try {
          ev = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
          if (last) break;  // torn write at the tail
          throw FormatError(path.string(), line_no,
                            "corrupt event at byte " + std::to_string(pos) + ": " + e.what());
        }
        try {
          apply_event(ev);
        } catch (const std::exception& e) {
          throw FormatError(path.string(), line_no,
                            "inconsistent event at byte " + std::to_string(pos) + ": " + e.what());
        }
      }
      if (last) {
        good_end = data.size();
        break;
      }
      pos = nl + 1;
      good_end = pos;
    }
    if (truncate_torn_tail && good_end < data.size()) {
      std::filesystem::resize_file(path, good_end);
    } else if (truncate_torn_tail && !data.empty() && data.back() != '\n') {
      // complete but unterminated final event: terminate it so appends start on a fresh line
      std::ofstream(path, std::ios::app | std::ios::binary) << '\n';
    }
  }

  void open_log() {
    const auto path = *dir_ / kLogName;
    log_fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log_fd_ < 0) throw Error("cannot open event log " + path.string() + ": " + std::strerror(errno));
  }

  void close_log() noexcept {
    if (log_fd_ >= 0) {
      ::fsync(log_fd_);
      ::close(log_fd_);
      log_fd_ = -1;
    }
  }

  void append_event(const nlohmann::ordered_json& ev) {
    if (log_fd_ < 0) return;
    const std::string line = ev.dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t n = ::write(log_fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("event log write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    if (options_.fsync_each_event) ::fsync(log_fd_);
  }

  static void write_durably(const std::filesystem::path& path, const std::string& content) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot write " + path.string() + ": " + std::strerror(errno));
    std::size_t done = 0;
    while (done < content.size()) {
      const ssize_t n = ::write(fd, content.data() + done, content.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) {
        ::close(fd);
        throw Error("cannot write " + path.string() + ": " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
  }

  StoreOptions options_;
  std::optional<std::filesystem::path> dir_;
  std::map<std::uint64_t, ValidationRow> rows_;
  std::unordered_map<std::string, std::uint64_t> by_key_;
  std::set<std::uint64_t> pending_;
  std::uint64_t next_row_id_ = 1;
  std::uint64_t last_seq_ = 0;
  int log_fd_ = -1;
  mutable std::shared_mutex mutex_;
};

}  // namespace prodmatch

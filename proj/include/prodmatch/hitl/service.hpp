#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/hitl/store.hpp"
#include "prodmatch/retrieval/prediction.hpp"

#include <httplib.h>
// <resolv.h>, pulled in by httplib, defines `_res`, an Eigen parameter name.
#ifdef _res
#undef _res
#endif

#ifndef PRODMATCH_VERSION
#define PRODMATCH_VERSION "0.0.0"
#endif

namespace prodmatch {

/// Result of a POST /match-jobs request: new predictions to browse and the
/// rows the job enqueued.
struct MatchJobResult {
  std::vector<MatchPrediction> predictions;
  nlohmann::ordered_json summary;
};

using MatchJobFn = std::function<MatchJobResult(const nlohmann::json& request)>;

struct ServiceOptions {
  /// When false, ground truth never leaves the server.
  bool expose_truth = false;
  std::string validator_header = "X-Validator-Id";
  MatchJobFn match_job;
};

/// JSON-over-HTTP front of a HitlStore:
///   GET  /health
///   GET  /validation/next?validator=ID   (or the validator header)
///   POST /validation/{row}/vote          {"validator", "choice"}
///   GET  /validation/stats
///   GET  /rows/{id}
///   GET  /matches?offset=&limit=
///   POST /match-jobs
/// Errors are {"error", "detail"} with 400 (bad request), 404 (unknown row),
/// 409 (double vote, completed row) or 500.
class ValidationService {
 public:
  ValidationService(HitlStore& store, ServiceOptions options = {})
      : store_(store), options_(std::move(options)) {
    routes();
  }

  ValidationService(const ValidationService&) = delete;
  ValidationService& operator=(const ValidationService&) = delete;

  void set_matches(std::vector<MatchPrediction> matches) {
    std::unique_lock lock(matches_mutex_);
    matches_ = std::move(matches);
  }

  /// Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port; serve with listen_after_bind().
  int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  /// Stops accepting requests and flushes the event log.
  void stop() {
    server_.stop();
    store_.flush();
  }

  bool running() const { return server_.is_running(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, const std::string& error, const std::string& detail) {
    reply(res, status, nlohmann::ordered_json{{"error", error}, {"detail", detail}});
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const NotFoundError& e) {
      fail(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
      fail(res, 409, "conflict", e.what());
    } catch (const DomainError& e) {
      fail(res, 400, "bad_request", e.what());
    } catch (const ConfigError& e) {
      fail(res, 400, "bad_request", e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      fail(res, 500, "internal", e.what());
    }
  }

  static std::uint64_t parse_row_id(const std::string& s) {
    if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos)
      throw DomainError("row id must be a non-negative integer");
    return std::stoull(s);
  }

  std::string validator_of(const httplib::Request& req) const {
    if (req.has_param("validator")) return req.get_param_value("validator");
    return req.get_header_value(options_.validator_header);
  }

  void routes() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"status", "ok"}, {"version", PRODMATCH_VERSION}});
    });

    server_.Get("/validation/next", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string validator = validator_of(req);
        if (validator.empty()) throw DomainError("validator id required (query parameter or header)");
        auto row = store_.next_for(validator);
        if (!row) {
          reply(res, 200, {{"row", nullptr}});
          return;
        }
        reply(res, 200, {{"row", to_json(*row, false, options_.expose_truth)}});
      });
    });

    server_.Post(R"(/validation/(\d+)/vote)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::uint64_t id = parse_row_id(req.matches[1]);
        const auto body = nlohmann::json::parse(req.body);
        std::string validator = body.value("validator", std::string());
        if (validator.empty()) validator = req.get_header_value(options_.validator_header);
        if (!body.contains("choice") || !body["choice"].is_number_integer())
          throw DomainError("'choice' must be an integer (0 = no match, 1..3 = candidate)");
        const ValidationRow row = store_.record_vote(id, validator, body["choice"].get<int>());
        reply(res, 200, to_json(row, true, options_.expose_truth));
      });
    });

    server_.Get("/validation/stats", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, store_.stats()); });
    });

    server_.Get(R"(/rows/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, to_json(store_.row(parse_row_id(req.matches[1])), true, options_.expose_truth)); });
    });

    server_.Get("/matches", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::shared_lock lock(matches_mutex_);
        const std::size_t offset = req.has_param("offset") ? parse_row_id(req.get_param_value("offset")) : 0;
        const std::size_t limit = req.has_param("limit") ? parse_row_id(req.get_param_value("limit")) : 100;
        nlohmann::ordered_json out;
        out["total"] = matches_.size();
        out["offset"] = offset;
        out["matches"] = nlohmann::ordered_json::array();
        for (std::size_t i = offset; i < matches_.size() && i < offset + limit; ++i)
          out["matches"].push_back(to_json(matches_[i]));
        reply(res, 200, out);
      });
    });

    server_.Post("/match-jobs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (!options_.match_job) {
          fail(res, 503, "unavailable", "no match job configured for this server");
          return;
        }
        const auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
        std::unique_lock job(job_mutex_);
        MatchJobResult result = options_.match_job(body);
        set_matches(std::move(result.predictions));
        reply(res, 200, result.summary);
      });
    });
  }

  HitlStore& store_;
  ServiceOptions options_;
  httplib::Server server_;
  std::vector<MatchPrediction> matches_;
  mutable std::shared_mutex matches_mutex_;
  std::mutex job_mutex_;
};

}  // namespace prodmatch

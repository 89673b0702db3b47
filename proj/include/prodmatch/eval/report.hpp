#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prodmatch/eval/metrics.hpp"

namespace prodmatch {

/// Operating point marked in reports: similarity 0.80, i.e. distance <= 0.20.
/// Stored as a distance so a candidate at exactly 0.2 is inside.
inline constexpr double kOperatingSimilarity = 0.80;
inline constexpr double kOperatingDistance = 0.20;

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> recall;  // aligned with ks
  std::vector<PRPoint> curve;
  double aucpr = 0.0;
  PRPoint operating_point;  // at kOperatingDistance
  std::size_t query_count = 0;
  std::size_t matched_query_count = 0;
  std::map<std::string, EvalReport> per_category;

  double recall_at(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (ks[i] == k) return recall[i];
    throw NotFoundError("recall@" + std::to_string(k) + " not in report");
  }
};

inline EvalReport evaluate(std::span<const MatchPrediction> predictions, const GroundTruth& gt,
                           std::vector<std::size_t> ks = {1, 3}) {
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  EvalReport r;
  r.ks = ks;
  for (std::size_t k : ks) r.recall.push_back(recall_at_k(predictions, gt, k));
  r.curve = pr_curve(predictions, gt);
  r.aucpr = aucpr(r.curve);
  r.operating_point = point_at_threshold(r.curve, kOperatingDistance);
  r.query_count = predictions.size();
  r.matched_query_count = matched_query_count(predictions, gt);
  return r;
}

inline const std::string kPooledCategory = "other";

/// Full report per query category. Categories with fewer than
/// `min_matched_queries` matched queries are pooled into "other"; a pool
/// without matched queries is omitted.
inline std::map<std::string, EvalReport> per_category_report(
    std::span<const MatchPrediction> predictions, const GroundTruth& gt,
    const std::function<std::string(const OfferKey&)>& category_of, std::vector<std::size_t> ks = {1, 3},
    std::size_t min_matched_queries = 1) {
  std::map<std::string, std::vector<MatchPrediction>> parts;
  std::map<std::string, std::size_t> matched;
  for (const auto& p : predictions) {
    const std::string c = category_of(p.query_key);
    parts[c].push_back(p);
    if (detail::matches_of(gt, p.query_key)) ++matched[c];
  }
  std::map<std::string, std::vector<MatchPrediction>> pooled;
  for (auto& [category, preds] : parts) {
    const bool small = matched[category] < std::max<std::size_t>(min_matched_queries, 1);
    auto& dst = pooled[small ? kPooledCategory : category];
    dst.insert(dst.end(), preds.begin(), preds.end());
  }
  std::map<std::string, EvalReport> out;
  for (const auto& [category, preds] : pooled) {
    if (matched_query_count(preds, gt) == 0) continue;
    out.emplace(category, evaluate(preds, gt, ks));
  }
  return out;
}

namespace detail {

inline nlohmann::ordered_json point_json(const PRPoint& p) {
  nlohmann::ordered_json j;
  if (std::isfinite(p.threshold))
    j["threshold"] = p.threshold;
  else
    j["threshold"] = nullptr;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["accepted"] = p.accepted_count;
  j["true_accepted"] = p.true_accepted;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const EvalReport& r, bool include_curve = true) {
  nlohmann::ordered_json j;
  j["query_count"] = r.query_count;
  j["matched_query_count"] = r.matched_query_count;
  nlohmann::ordered_json rec = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < r.ks.size(); ++i) rec["R@" + std::to_string(r.ks[i])] = r.recall[i];
  j["recall"] = rec;
  j["aucpr"] = r.aucpr;
  nlohmann::ordered_json op = detail::point_json(r.operating_point);
  op["similarity"] = kOperatingSimilarity;
  j["operating_point"] = op;
  if (include_curve) {
    j["curve"] = nlohmann::ordered_json::array();
    for (const auto& p : r.curve) j["curve"].push_back(detail::point_json(p));
  }
  if (!r.per_category.empty()) {
    nlohmann::ordered_json cats = nlohmann::ordered_json::object();
    for (const auto& [name, sub] : r.per_category) cats[name] = to_json(sub, include_curve);
    j["per_category"] = cats;
  }
  return j;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Step-wise PR chart, one polyline per series, operating points as dots.
inline std::string pr_chart_svg(const std::map<std::string, const EvalReport*>& series) {
  constexpr double W = 480, H = 360, L = 50, T = 20, R = 130, B = 40;
  const double pw = W - L - R, ph = H - T - B;
  auto x = [&](double recall) { return L + recall * pw; };
  auto y = [&](double precision) { return T + (1.0 - precision) * ph; };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    os << "<text x=\"" << x(v) << "\" y=\"" << H - B + 15 << "\" font-size=\"10\" text-anchor=\"middle\">" << v
       << "</text>\n";
    os << "<text x=\"" << L - 5 << "\" y=\"" << y(v) + 3 << "\" font-size=\"10\" text-anchor=\"end\">" << v
       << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 5 << "\" font-size=\"12\" text-anchor=\"middle\">recall</text>\n";
  os << "<text x=\"12\" y=\"" << T + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << T + ph / 2
     << ")\" text-anchor=\"middle\">precision</text>\n";
  std::size_t s = 0;
  for (const auto& [name, report] : series) {
    const char* color = colors[s % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    double prev_p = 1.0;
    for (const auto& p : report->curve) {
      os << x(p.recall) << ',' << y(prev_p) << ' ' << x(p.recall) << ',' << y(p.precision) << ' ';
      prev_p = p.precision;
    }
    os << "\"/>\n";
    const auto& op = report->operating_point;
    os << "<circle cx=\"" << x(op.recall) << "\" cy=\"" << y(op.precision) << "\" r=\"3\" fill=\"black\"/>\n";
    os << "<text x=\"" << W - R + 8 << "\" y=\"" << T + 14 * (s + 1) << "\" font-size=\"11\" fill=\"" << color
       << "\">" << detail::xml_escape(name) << "</text>\n";
    ++s;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace prodmatch

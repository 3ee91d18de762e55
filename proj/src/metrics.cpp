// SPDX-License-Identifier: Apache-2.0
#include "liforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "liforge/error.hpp"
#include "liforge/io.hpp"

namespace liforge {
namespace {

int grade_of(const Judgments& judged, const std::string& doc) {
  auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

std::size_t relevant_count(const Judgments& judged) {
  return static_cast<std::size_t>(
      std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second > 0; }));
}

std::size_t cutoff(const std::vector<RunEntry>& ranked, int k) {
  if (k < 1) throw std::invalid_argument("metric cutoff must be >= 1");
  return std::min(ranked.size(), static_cast<std::size_t>(k));
}

double gain(int grade, bool exponential) { return exponential ? std::exp2(grade) - 1.0 : grade; }

}  // namespace

std::string MetricSpec::name() const {
  const char* base = "";
  switch (kind) {
    case MetricKind::NDCG: base = "ndcg"; break;
    case MetricKind::NDCGExp: base = "ndcg_exp"; break;
    case MetricKind::MRR: base = "mrr"; break;
    case MetricKind::Recall: base = "recall"; break;
    case MetricKind::MAP: base = "map"; break;
    case MetricKind::HitRate: base = "hitrate"; break;
  }
  return std::string(base) + "@" + std::to_string(k);
}

MetricSpec MetricSpec::parse(const std::string& text) {
  const auto at = text.find('@');
  if (at == std::string::npos) throw std::invalid_argument("metric '" + text + "' needs a cutoff, e.g. ndcg@10");
  std::string base = text.substr(0, at);
  std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::tolower(c); });
  MetricSpec spec;
  if (base == "ndcg") {
    spec.kind = MetricKind::NDCG;
  } else if (base == "ndcg_exp") {
    spec.kind = MetricKind::NDCGExp;
  } else if (base == "mrr") {
    spec.kind = MetricKind::MRR;
  } else if (base == "recall") {
    spec.kind = MetricKind::Recall;
  } else if (base == "map") {
    spec.kind = MetricKind::MAP;
  } else if (base == "hitrate" || base == "hit_rate") {
    spec.kind = MetricKind::HitRate;
  } else {
    throw std::invalid_argument("unknown metric '" + base + "'");
  }
  try {
    std::size_t used = 0;
    spec.k = std::stoi(text.substr(at + 1), &used);
    if (used != text.size() - at - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("metric '" + text + "': bad cutoff");
  }
  if (spec.k < 1) throw std::invalid_argument("metric '" + text + "': cutoff must be >= 1");
  return spec;
}

std::vector<MetricSpec> parse_metric_list(const std::string& comma_separated) {
  std::vector<MetricSpec> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(MetricSpec::parse(item));
  }
  if (out.empty()) throw std::invalid_argument("no metrics requested");
  return out;
}

double ndcg_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k, bool exponential_gain) {
  const std::size_t n = cutoff(ranked, k);
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dcg += gain(grade_of(judged, ranked[i].doc_id), exponential_gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> grades;
  for (const auto& [doc, g] : judged) {
    if (g > 0) grades.push_back(g);
  }
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t i = 0; i < grades.size() && i < static_cast<std::size_t>(k); ++i) {
    ideal += gain(grades[i], exponential_gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return ideal > 0.0 ? dcg / ideal : 0.0;
}

double mrr_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k) {
  const std::size_t n = cutoff(ranked, k);
  for (std::size_t i = 0; i < n; ++i) {
    if (grade_of(judged, ranked[i].doc_id) > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double recall_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k) {
  const std::size_t rel = relevant_count(judged);
  if (rel == 0) return 0.0;
  const std::size_t n = cutoff(ranked, k);
  std::size_t found = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grade_of(judged, ranked[i].doc_id) > 0) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(rel);
}

double map_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k) {
  const std::size_t rel = relevant_count(judged);
  if (rel == 0) return 0.0;
  const std::size_t n = cutoff(ranked, k);
  std::size_t found = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grade_of(judged, ranked[i].doc_id) > 0) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(rel, static_cast<std::size_t>(k)));
}

double hit_rate_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k) {
  return mrr_at_k(ranked, judged, k) > 0.0 ? 1.0 : 0.0;
}

double compute_metric(const MetricSpec& spec, const std::vector<RunEntry>& ranked, const Judgments& judged) {
  switch (spec.kind) {
    case MetricKind::NDCG: return ndcg_at_k(ranked, judged, spec.k, false);
    case MetricKind::NDCGExp: return ndcg_at_k(ranked, judged, spec.k, true);
    case MetricKind::MRR: return mrr_at_k(ranked, judged, spec.k);
    case MetricKind::Recall: return recall_at_k(ranked, judged, spec.k);
    case MetricKind::MAP: return map_at_k(ranked, judged, spec.k);
    case MetricKind::HitRate: return hit_rate_at_k(ranked, judged, spec.k);
  }
  throw std::invalid_argument("compute_metric: unknown metric");
}

MetricReport evaluate_run(const RunList& run, const Qrels& qrels, const std::vector<MetricSpec>& metrics) {
  MetricReport report;
  for (const auto& m : metrics) {
    if (!report.metrics.count(m.name())) report.order.push_back(m.name());
    report.metrics[m.name()];
  }
  std::size_t counted = 0;
  for (const auto& [qid, entries] : run) {
    auto it = qrels.find(qid);
    if (it == qrels.end()) throw DataError("run query " + qid + " has no qrels");
    if (relevant_count(it->second) == 0) {
      report.excluded_queries.push_back(qid);
      continue;
    }
    auto ranked = entries;
    sort_run_entries(ranked);
    for (const auto& m : metrics) report.metrics[m.name()].per_query[qid] = compute_metric(m, ranked, it->second);
    ++counted;
  }
  for (auto& [name, value] : report.metrics) {
    double sum = 0.0;
    for (const auto& [qid, v] : value.per_query) sum += v;
    value.mean = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  }
  return report;
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  os << "metric\tmean\tqueries\n";
  for (const auto& name : order) {
    const auto& v = metrics.at(name);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v.mean);
    os << name << '\t' << buf << '\t' << v.per_query.size() << '\n';
  }
  if (!excluded_queries.empty()) os << "# excluded queries without relevant docs: " << excluded_queries.size() << '\n';
  return os.str();
}

std::string MetricReport::to_json_lines() const {
  std::ostringstream os;
  for (const auto& name : order) {
    const auto& v = metrics.at(name);
    nlohmann::json j{{"metric", name},
                     {"mean", v.mean},
                     {"queries", v.per_query.size()},
                     {"excluded", excluded_queries.size()},
                     {"per_query", v.per_query}};
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace liforge

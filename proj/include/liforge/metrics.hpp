// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "liforge/types.hpp"

namespace liforge {

enum class MetricKind { NDCG, NDCGExp, MRR, Recall, MAP, HitRate };

struct MetricSpec {
  MetricKind kind = MetricKind::NDCG;
  int k = 10;

  /// "ndcg@10", "ndcg_exp@10", "mrr@10", "recall@5", "map@10", "hitrate@10".
  std::string name() const;
  static MetricSpec parse(const std::string& text);
};

std::vector<MetricSpec> parse_metric_list(const std::string& comma_separated);

// Per-query metrics over a ranked list and that query's judgments. A doc is
// relevant when its grade is > 0; unjudged docs count as grade 0.
using Judgments = std::map<std::string, int>;

/// DCG = sum_{i<=k} gain_i / log2(i + 1), normalized by the ideal ordering of
/// all judged grades. Linear gain by default, 2^g - 1 with exponential_gain.
double ndcg_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k, bool exponential_gain = false);
double mrr_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k);
double recall_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k);
/// Sum of precision@i at relevant ranks i <= k, over min(|relevant|, k).
double map_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k);
double hit_rate_at_k(const std::vector<RunEntry>& ranked, const Judgments& judged, int k);

double compute_metric(const MetricSpec& spec, const std::vector<RunEntry>& ranked, const Judgments& judged);

struct MetricValue {
  std::map<std::string, double> per_query;
  double mean = 0.0;
};

struct MetricReport {
  /// Metric names in request order.
  std::vector<std::string> order;
  std::map<std::string, MetricValue> metrics;
  /// Run queries whose judgments contain no relevant doc; left out of means.
  std::vector<std::string> excluded_queries;

  /// One "metric<TAB>mean<TAB>queries" row per metric.
  std::string to_table() const;
  /// One JSON object per metric: {"metric", "mean", "queries", "excluded", "per_query"}.
  std::string to_json_lines() const;
};

/// Evaluates every run query. Throws DataError if a run query has no qrels.
MetricReport evaluate_run(const RunList& run, const Qrels& qrels, const std::vector<MetricSpec>& metrics);

}  // namespace liforge

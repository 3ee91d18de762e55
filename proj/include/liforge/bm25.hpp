// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "liforge/types.hpp"

namespace liforge {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

struct Posting {
  std::uint32_t doc = 0;  // internal index, ascending doc_id order
  std::uint32_t tf = 0;
};

/// Okapi BM25 over an in-memory inverted index.
/// score(q, d) = sum_t idf(t) * tf (k1 + 1) / (tf + k1 (1 - b + b len/avglen)),
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Query terms count once per
/// occurrence.
class Bm25Index {
 public:
  Bm25Index() = default;
  static Bm25Index build(const std::vector<Document>& corpus, Bm25Params params = {});

  double score(const std::vector<std::string>& query_terms, const std::string& doc_id) const;
  /// Top `depth` documents by score (desc), ties by ascending doc_id.
  /// Documents matching no query term rank last with score 0.
  std::vector<RunEntry> search(const std::vector<std::string>& query_terms, std::size_t depth) const;

  double idf(const std::string& term) const;
  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double average_length() const noexcept { return avg_len_; }
  const Bm25Params& params() const noexcept { return params_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::vector<Posting>* postings(const std::string& term) const;

  /// JSON file: params, doc ids and lengths, postings per term.
  void save(const std::string& path) const;
  static Bm25Index load(const std::string& path);

 private:
  double term_weight(double idf, std::uint32_t tf, std::uint32_t doc) const;
  std::uint32_t doc_index(const std::string& doc_id) const;

  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_len_;
  std::unordered_map<std::string, std::uint32_t> doc_lookup_;
  std::map<std::string, std::vector<Posting>> postings_;
  double avg_len_ = 0.0;
};

/// Sub-corpus for a compact dev set: union of the BM25 top-`depth` documents
/// of every query plus every positively judged document of those queries.
/// Output keeps corpus order; qrels are passed through unchanged.
struct MinedDevset {
  std::vector<Document> corpus;
  Qrels qrels;
};

MinedDevset mine_small_devset(const std::vector<Query>& queries, const Qrels& qrels,
                              const std::vector<Document>& corpus, const Bm25Index& index, std::size_t depth = 250);

}  // namespace liforge

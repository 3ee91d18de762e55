// SPDX-License-Identifier: Apache-2.0
#include "liforge/search.hpp"

#include <algorithm>
#include <stdexcept>

#include "liforge/parallel.hpp"

namespace liforge {

EncodedCorpus::EncodedCorpus(std::vector<std::string> doc_ids, const std::vector<EmbeddingMatrix>& docs)
    : doc_ids_(std::move(doc_ids)) {
  if (doc_ids_.size() != docs.size()) throw std::invalid_argument("EncodedCorpus: id/embedding count mismatch");
  Eigen::Index total = 0;
  Eigen::Index dim = docs.empty() ? 1 : docs.front().dim();
  offsets_.push_back(0);
  for (const auto& d : docs) {
    if (d.dim() != dim) throw std::invalid_argument("EncodedCorpus: documents have different dims");
    total += d.rows();
    offsets_.push_back(total);
  }
  rows_.resize(total, dim);
  for (std::size_t i = 0; i < docs.size(); ++i) rows_.middleRows(offsets_[i], docs[i].rows()) = docs[i].data();
}

EncodedCorpus encode_corpus(const std::vector<Document>& corpus, const Vocab& vocab, const EncoderParams& params,
                            const EncoderConfig& cfg, int threads) {
  std::vector<EmbeddingMatrix> docs(corpus.size());
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& d : corpus) ids.push_back(d.id);
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    docs[i] = encode(prepare_document(tokenize(corpus[i].text, vocab), cfg), params, cfg, false);
  });
  return EncodedCorpus(std::move(ids), docs);
}

std::vector<double> maxsim_all(const EmbeddingMatrix& query, const EncodedCorpus& corpus) {
  if (corpus.size() > 0 && query.dim() != corpus.dim()) {
    throw std::invalid_argument("exact_search: query/corpus dimension mismatch");
  }
  const Matrix sims = query.data() * corpus.rows().transpose();
  std::vector<double> scores(corpus.size());
  for (std::size_t doc = 0; doc < corpus.size(); ++doc) {
    const auto start = corpus.offset(doc);
    const auto len = corpus.length(doc);
    double total = 0.0;
    for (Eigen::Index i = 0; i < sims.rows(); ++i) {
      double best = sims(i, start);
      for (Eigen::Index j = 1; j < len; ++j) best = std::max(best, sims(i, start + j));
      total += best;
    }
    scores[doc] = total;
  }
  return scores;
}

std::vector<RunEntry> exact_search(const EmbeddingMatrix& query, const EncodedCorpus& corpus, std::size_t k) {
  if (k < 1) throw std::invalid_argument("exact_search: k must be >= 1");
  const auto scores = maxsim_all(query, corpus);
  std::vector<RunEntry> entries;
  entries.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) entries.push_back({corpus.doc_ids()[i], scores[i]});
  const std::size_t keep = std::min(k, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(),
                    [](const RunEntry& a, const RunEntry& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.doc_id < b.doc_id;
                    });
  entries.resize(keep);
  return entries;
}

RunList search_queries(const std::vector<Query>& queries, const Vocab& vocab, const EncoderParams& params,
                       const EncoderConfig& cfg, const EncodedCorpus& corpus, std::size_t k, int threads) {
  std::vector<std::vector<RunEntry>> results(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    const auto q = encode(prepare_query(tokenize(queries[i].text, vocab), cfg), params, cfg, true);
    results[i] = exact_search(q, corpus, k);
  });
  RunList run;
  for (std::size_t i = 0; i < queries.size(); ++i) run[queries[i].id] = std::move(results[i]);
  return run;
}

}  // namespace liforge

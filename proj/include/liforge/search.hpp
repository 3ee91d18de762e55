// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "liforge/encoder.hpp"
#include "liforge/types.hpp"
#include "liforge/vocab.hpp"

namespace liforge {

/// Document embeddings laid out for exhaustive MaxSim search: all token rows
/// stacked into one matrix with per-document offsets.
class EncodedCorpus {
 public:
  EncodedCorpus() = default;
  EncodedCorpus(std::vector<std::string> doc_ids, const std::vector<EmbeddingMatrix>& docs);

  std::size_t size() const noexcept { return doc_ids_.size(); }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const Matrix& rows() const noexcept { return rows_; }
  Eigen::Index offset(std::size_t doc) const { return offsets_[doc]; }
  Eigen::Index length(std::size_t doc) const { return offsets_[doc + 1] - offsets_[doc]; }
  Eigen::Index dim() const noexcept { return rows_.cols(); }

 private:
  std::vector<std::string> doc_ids_;
  std::vector<Eigen::Index> offsets_;
  Matrix rows_;
};

EncodedCorpus encode_corpus(const std::vector<Document>& corpus, const Vocab& vocab, const EncoderParams& params,
                            const EncoderConfig& cfg, int threads = 1);

/// MaxSim of `query` against every document in one pass.
std::vector<double> maxsim_all(const EmbeddingMatrix& query, const EncodedCorpus& corpus);

/// Top-k documents by MaxSim, score descending, ties by ascending doc_id.
std::vector<RunEntry> exact_search(const EmbeddingMatrix& query, const EncodedCorpus& corpus, std::size_t k);

/// Encodes (with augmentation) and searches every query.
RunList search_queries(const std::vector<Query>& queries, const Vocab& vocab, const EncoderParams& params,
                       const EncoderConfig& cfg, const EncodedCorpus& corpus, std::size_t k, int threads = 1);

}  // namespace liforge

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace liforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using TokenIds = std::vector<std::int32_t>;

/// Per-token embeddings of one query or document, one row per token.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(Matrix rows, bool normalized);

  Eigen::Index rows() const noexcept { return data_.rows(); }
  Eigen::Index dim() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  /// True iff every row has unit norm (no degenerate rows were kept raw).
  bool normalized() const noexcept { return normalized_; }

  /// Scales every row to unit norm; rows with norm < 1e-12 stay as-is and
  /// clear the normalized flag.
  static EmbeddingMatrix normalize_rows(Matrix raw);

 private:
  Matrix data_;
  bool normalized_ = false;
};

struct ScoredDoc {
  std::string doc_id;
  std::string text;
  std::map<std::string, double> teacher_scores;
};

/// One query with an n-way document list. docs[0] is the annotated positive
/// by convention; only margin-based and in-batch-negative losses read that.
struct TripletRecord {
  std::string query_id;
  std::string query_text;
  std::vector<ScoredDoc> docs;

  std::size_t n_way() const noexcept { return docs.size(); }
  /// Scores of `teacher` across docs, in doc order. Throws DataError naming
  /// the doc and teacher when a score is missing.
  std::vector<double> teacher_scores(const std::string& teacher) const;
};

struct Document {
  std::string id;
  std::string text;
};

struct Query {
  std::string id;
  std::string text;
};

/// query_id -> doc_id -> grade (>= 0).
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct RunEntry {
  std::string doc_id;
  double score = 0.0;
};

/// query_id -> ranked entries (score non-increasing, ties by ascending doc_id).
using RunList = std::map<std::string, std::vector<RunEntry>>;

/// Sorts entries by score descending, then doc_id ascending.
void sort_run_entries(std::vector<RunEntry>& entries);

}  // namespace liforge

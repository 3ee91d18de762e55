// SPDX-License-Identifier: Apache-2.0
#include "liforge/types.hpp"

#include <algorithm>
#include <stdexcept>

#include "liforge/error.hpp"

namespace liforge {

EmbeddingMatrix::EmbeddingMatrix(Matrix rows, bool normalized)
    : data_(std::move(rows)), normalized_(normalized) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw std::invalid_argument("EmbeddingMatrix needs at least one row and one column");
  }
  if (normalized_) {
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      if (std::abs(data_.row(i).norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("EmbeddingMatrix flagged normalized but row " + std::to_string(i) +
                                    " is not unit length");
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::normalize_rows(Matrix raw) {
  bool all_unit = true;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double n = raw.row(i).norm();
    if (n < 1e-12) {
      all_unit = false;
      continue;
    }
    raw.row(i) /= n;
  }
  return EmbeddingMatrix(std::move(raw), all_unit);
}

std::vector<double> TripletRecord::teacher_scores(const std::string& teacher) const {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    auto it = d.teacher_scores.find(teacher);
    if (it == d.teacher_scores.end()) {
      throw DataError("query " + query_id + ": doc " + d.doc_id + " has no score for teacher '" +
                      teacher + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

void sort_run_entries(std::vector<RunEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RunEntry& a, const RunEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

}  // namespace liforge

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "liforge/types.hpp"
#include "liforge/vocab.hpp"

namespace liforge {

// Query augmentation policies. Counts include the query-marker token.
struct NoAugmentation {
  bool operator==(const NoAugmentation&) const = default;
};
/// Append exactly `k` masks.
struct FixedAugmentation {
  int k = 8;
  bool operator==(const FixedAugmentation&) const = default;
};
/// Pad (or truncate) to exactly `max_len` tokens, classic ColBERT behaviour.
struct FixedMaxLength {
  int max_len = 32;
  bool operator==(const FixedMaxLength&) const = default;
};
/// Pad to the next multiple of `base`, but always append at least `min_masks`.
struct DynamicLength {
  int base = 32;
  int min_masks = 8;
  bool operator==(const DynamicLength&) const = default;
};

using AugmentationMode = std::variant<NoAugmentation, FixedAugmentation, FixedMaxLength, DynamicLength>;

/// Throws std::invalid_argument when a mode's parameters are out of range.
void validate(const AugmentationMode& mode);

/// "none", "fixed:8", "fixedmax:32", "dynamic:32:8".
std::string to_string(const AugmentationMode& mode);
AugmentationMode parse_augmentation(const std::string& text);

int padded_query_length(int token_count, const AugmentationMode& mode);

/// [QMARK] ++ tokens ++ [MASK] * (padded length - marker-inclusive count).
/// Under FixedMaxLength the tokens are truncated first so the marker plus
/// tokens fit into max_len.
TokenIds augment_query(const TokenIds& tokens, const AugmentationMode& mode);

/// Sum over query rows of the max dot product against document rows.
double maxsim(const EmbeddingMatrix& q, const EmbeddingMatrix& d);

/// maxsim plus, for every query row, the first document row attaining the max.
double maxsim(const EmbeddingMatrix& q, const EmbeddingMatrix& d, std::vector<Eigen::Index>& argmax);

std::vector<double> maxsim_batch(const EmbeddingMatrix& q, std::span<const EmbeddingMatrix> docs);

/// Gradients of maxsim(q, d) scaled by `upstream`, accumulated into dq / dd.
/// `argmax` is the vector produced by the forward call.
void maxsim_backward(const EmbeddingMatrix& q, const EmbeddingMatrix& d,
                     const std::vector<Eigen::Index>& argmax, double upstream, Matrix& dq, Matrix& dd);

}  // namespace liforge

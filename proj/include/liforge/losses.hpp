// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "liforge/types.hpp"

namespace liforge {

enum class LossKind { KLDiv, MarginMSE, Mixed };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

struct LossConfig {
  LossKind kind = LossKind::KLDiv;
  /// Weight of the MarginMSE term under LossKind::Mixed.
  double mmse_lambda = 0.1;
  bool normalize_teacher = true;
  bool normalize_student = true;
  bool ibneg_enabled = false;
  double temperature = 1.0;

  void validate() const;
};

struct NormalizedScores {
  std::vector<double> values;
  /// max == min: values are all zero and carry no ranking.
  bool degenerate = false;
};

/// (s - min) / (max - min). Needs at least two scores.
NormalizedScores minmax_normalize(std::span<const double> scores);

/// Vector-Jacobian product of minmax_normalize: maps d/d(normalized) to
/// d/d(raw). At ties the first index attaining the min (max) is treated as
/// the argmin (argmax). Returns zeros for degenerate input.
std::vector<double> minmax_normalize_backward(std::span<const double> scores, std::span<const double> upstream);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d student score
  /// Normalization of either side hit max == min; callers skip the example.
  bool degenerate = false;
};

/// KL(softmax(teacher'/tau) || softmax(student'/tau)), ' = optional min-max.
LossResult kl_div_loss(std::span<const double> student, std::span<const double> teacher, const LossConfig& cfg);

/// Mean over negatives j of ((t0 - tj) - (s0 - sj))^2. Index 0 is the positive.
LossResult margin_mse_loss(std::span<const double> student, std::span<const double> teacher,
                           const LossConfig& cfg);

/// kl_div_loss + mmse_lambda * margin_mse_loss.
LossResult mixed_loss(std::span<const double> student, std::span<const double> teacher, const LossConfig& cfg);

/// Dispatches on cfg.kind.
LossResult distillation_loss(std::span<const double> student, std::span<const double> teacher,
                             const LossConfig& cfg);

struct MatrixLossResult {
  double loss = 0.0;
  Matrix grad;
};

/// Mean over rows of cross-entropy(softmax(row_i), target i).
MatrixLossResult ibneg_loss(const Matrix& scores);

/// Sum of `values` taken in ascending order, so any permutation of the
/// same values gives the same bits.
double sorted_sum(std::vector<double> values);

}  // namespace liforge

// SPDX-License-Identifier: Apache-2.0
// Randomized check routines shared by the unit tests and the acceptance gate.
#pragma once

#include <string>
#include <vector>

#include "liforge/checkpoint.hpp"
#include "liforge/losses.hpp"
#include "liforge/rng.hpp"
#include "liforge/types.hpp"

namespace support {

/// Scores in [lo, hi) whose pairwise gaps are all >= min_gap (keeps finite
/// differences away from min/max ties).
std::vector<double> separated_scores(liforge::Rng& rng, std::size_t n, double lo, double hi, double min_gap);

/// Relative error of the analytic student-score gradient of
/// distillation_loss(cfg) against central differences, one random instance.
double loss_grad_error(liforge::Rng& rng, const liforge::LossConfig& cfg);

/// Same for ibneg_loss on a random BxB matrix.
double ibneg_grad_error(liforge::Rng& rng, int b);

/// Same for the encoder parameters, objective sum(upstream .* encode(tokens)).
double encoder_grad_error(liforge::Rng& rng, bool mixer, bool is_query);

liforge::Matrix random_rows(liforge::Rng& rng, int rows, int dim);
liforge::EmbeddingMatrix random_embedding(liforge::Rng& rng, int rows, int dim);

/// |maxsim - naive triple loop| on one random pair.
double maxsim_oracle_error(liforge::Rng& rng);

/// exact_search against a full-sort oracle on a random corpus; returns the
/// max score error, or +inf if the ranked doc ids differ.
double exact_search_oracle_error(liforge::Rng& rng, int n_docs);

/// Max |library - brute force| over every metric on one random run/qrels
/// instance of <= 10 queries x <= 20 docs; +inf on structural mismatch.
double metrics_oracle_error(liforge::Rng& rng);

/// Random tensors (<= 4 dims) including +-0 and subnormals.
liforge::Checkpoint random_checkpoint(liforge::Rng& rng);

/// Fresh empty directory under the system temp dir.
std::string fresh_dir(const std::string& name);

}  // namespace support

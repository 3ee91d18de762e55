// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "liforge/checkpoint.hpp"
#include "liforge/encoder.hpp"
#include "liforge/losses.hpp"
#include "liforge/optim.hpp"
#include "liforge/types.hpp"
#include "liforge/vocab.hpp"

namespace liforge {

/// Training settings. Defaults are the full-scale recipe: 32-way records,
/// batch 16, KL-divergence on min-max normalized teacher and student scores,
/// no in-batch negatives, schedule-free AdamW at 3e-5 with 5% warmup and no
/// clipping, dynamic query length, 300-token documents, a checkpoint every
/// 2000 steps.
struct TrainConfig {
  int n_way = 32;
  int batch_size = 16;
  LossConfig loss;
  OptimConfig optim;
  EncoderConfig encoder;
  std::int64_t checkpoint_every = 2000;
  std::uint64_t seed = 0;
  std::int64_t total_steps = 0;
  std::vector<std::string> teachers = {"oracle"};
  /// Worker threads for batch encoding; results do not depend on it.
  int threads = 1;
  /// Also store optimizer state (opt.* tensors) in checkpoints.
  bool save_optimizer_state = false;

  /// The same recipe at desk scale: 4-way records, hidden/out width 32.
  static TrainConfig desk_scale();
  void validate() const;
  /// Stable text listing of every setting; its hash is the checkpoint digest.
  std::string canonical_text() const;
  std::string digest() const;
};

/// A triplet record tokenized and marked for the encoder.
struct PreparedRecord {
  std::string query_id;
  TokenIds query;
  std::vector<TokenIds> docs;
  std::vector<std::string> doc_ids;
  std::vector<double> teacher;
  /// Doc indices by ascending doc_id; gradient contributions are summed in
  /// this order so they do not depend on list position.
  std::vector<std::size_t> accumulation_order;
};

std::vector<PreparedRecord> prepare_records(const std::vector<TripletRecord>& records, const Vocab& vocab,
                                            const TrainConfig& cfg);

struct BatchResult {
  double loss = 0.0;
  EncoderParams grads;
  /// Records whose normalized scores were degenerate and were left out.
  int skipped_records = 0;
  /// Every record was skipped; loss and grads are meaningless.
  bool skipped = false;
};

/// Mean distillation loss over the batch (plus the in-batch-negative term
/// when enabled) and its gradient with respect to the encoder parameters.
BatchResult evaluate_batch(const std::vector<const PreparedRecord*>& batch, const EncoderParams& params,
                           const TrainConfig& cfg);

struct StepLog {
  std::int64_t step = 0;
  double loss = 0.0;  // NaN for skipped batches
  double lr = 0.0;
};

struct TrainResult {
  /// Initial checkpoint, one every checkpoint_every steps, and the final one.
  std::vector<Checkpoint> checkpoints;
  std::vector<StepLog> trace;
  std::int64_t skipped_records = 0;
  std::int64_t skipped_batches = 0;
  /// Parameters that evaluation should use (the averaged iterate under
  /// schedule-free).
  EncoderParams final_params;
};

/// Runs the distillation loop. Records must carry exactly cfg.n_way docs.
/// Throws TrainingError when a loss becomes non-finite.
TrainResult train(const TrainConfig& cfg, const std::vector<TripletRecord>& data, const Vocab& vocab,
                  const EncoderParams& initial);

/// Checkpoint of `params` with metadata from `cfg`.
Checkpoint make_checkpoint(const EncoderParams& params, const TrainConfig& cfg, std::int64_t step);

/// step<TAB>loss<TAB>lr lines.
void write_loss_trace(const std::string& path, const std::vector<StepLog>& trace);

}  // namespace liforge

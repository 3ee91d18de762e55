// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "liforge/checkpoint.hpp"
#include "liforge/metrics.hpp"
#include "liforge/training.hpp"
#include "liforge/types.hpp"
#include "liforge/vocab.hpp"

namespace liforge {

/// Synthetic retrieval task with relevance planted in a latent topic space.
struct SynthSpec {
  std::uint64_t seed = 0;
  int vocab_size = 1000;
  int n_docs = 2000;
  /// Training queries (these get triplets).
  int n_queries = 500;
  /// Extra queries with qrels only, for evaluation.
  int heldout_queries = 100;
  int topic_dim = 16;
  int doc_len_min = 20;
  int doc_len_max = 40;
  int query_len_min = 4;
  int query_len_max = 8;
  double teacher_noise_sigma = 0.05;
  int n_way = 4;
  /// Sharpness of token sampling around an item's topic center.
  double concentration = 12.0;
  /// Gaussian perturbation applied to the anchor doc center to get a query center.
  double query_spread = 0.2;

  void validate() const;
};

struct SynthData {
  std::vector<Document> corpus;
  std::vector<Query> queries;
  std::vector<Query> heldout;
  /// Judgments for training and held-out queries.
  Qrels qrels;
  std::vector<TripletRecord> triplets;
  /// Cosine threshold that defined relevance.
  double threshold = 0.0;
};

/// Deterministic in spec. Throws GenerationError if the spec cannot yield
/// relevant documents (e.g. fewer docs than n_way).
SynthData generate(const SynthSpec& spec);

/// Vocabulary covering every token of the corpus and all queries.
Vocab synth_vocab(const SynthData& data);

/// Qrels restricted to the given queries.
Qrels restrict_qrels(const Qrels& qrels, const std::vector<Query>& queries);

/// Writes corpus.jsonl, queries.tsv, heldout.tsv, qrels.txt, heldout_qrels.txt,
/// triplets.jsonl and vocab.txt into `dir`.
void write_synth(const std::string& dir, const SynthData& data);

struct AblationCell {
  std::string name;
  TrainConfig config;
};

struct AblationRow {
  std::string name;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  /// Held-out metrics before and after training, by metric name.
  std::map<std::string, double> initial;
  std::map<std::string, double> trained;
  Checkpoint final_checkpoint;
  std::vector<StepLog> trace;
  std::int64_t skipped_batches = 0;
};

struct AblationResult {
  std::vector<std::string> metric_order;
  std::vector<AblationRow> rows;

  /// Tab-separated: config, seed, steps, trained metrics, then the gain of
  /// each metric over the untrained encoder.
  std::string to_table() const;
};

/// Trains every cell on the shared triplets from a seeded initialization
/// (same seed and encoder shape => same starting point) and evaluates the
/// initial and final encoders on the held-out queries by exact search.
/// `threads` overrides each cell's thread count; results do not depend on it.
/// Vocabulary size and n_way are taken from the data.
AblationResult run_ablation(const std::vector<AblationCell>& grid, const SynthData& data,
                            const std::vector<MetricSpec>& metrics, int threads = 1);

/// Initial parameters for a training run with this config.
EncoderParams initial_params(const TrainConfig& cfg);

/// Held-out evaluation of `params` by exact MaxSim search.
MetricReport evaluate_encoder(const SynthData& data, const Vocab& vocab, const EncoderParams& params,
                              const EncoderConfig& cfg, const std::vector<MetricSpec>& metrics, int threads = 1);

/// End-to-end distillation benchmark: ~2,000 docs, 500 training and 100
/// held-out queries, 4-way records, teacher noise 0.05, seed 0.
SynthSpec benchmark_synth_spec();

/// Final recipe (KL over min-max normalized teacher and student scores,
/// schedule-free AdamW, dynamic query length) at desk scale for the
/// benchmark: 2,000 steps of batch 16, mixer off, lr 1e-3.
TrainConfig benchmark_train_config(std::uint64_t seed);

/// One benchmark seed: benchmark_train_config(seed) on generate(benchmark_synth_spec()),
/// evaluated by NDCG@10 on the held-out queries before and after training.
AblationRow run_benchmark_seed(std::uint64_t seed, int threads = 1);

/// table.tsv plus, per row, <name>.ckpt and <name>.trace.tsv.
void write_ablation_outputs(const std::string& dir, const AblationResult& result);

}  // namespace liforge

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liforge/rng.hpp"
#include "liforge/types.hpp"

namespace liforge {

/// Picks `n_triplets` records uniformly without replacement (output keeps
/// source order). Each kept record retains doc 0 plus `target_nway - 1`
/// negatives drawn uniformly from the rest, in their original order.
std::vector<TripletRecord> downsample_triplets(const std::vector<TripletRecord>& source, std::size_t n_triplets,
                                               std::size_t target_nway, Rng& rng);

/// Min-max normalizes each named teacher's scores across the record's docs,
/// then averages them per doc.
std::vector<double> ensemble_teacher_scores(const TripletRecord& record, const std::vector<std::string>& teachers);

/// Teacher scores used for training: the raw scores of a single teacher, or
/// the ensemble when several are named.
std::vector<double> training_teacher_scores(const TripletRecord& record, const std::vector<std::string>& teachers);

struct MixSource {
  std::string name;
  std::vector<TripletRecord> records;
  double weight = 1.0;
};

struct PretrainInjection {
  std::vector<TripletRecord> records;
  /// Share of the final stream made of pretraining records, in [0, 1).
  double fraction = 0.1;
};

struct MixSpec {
  std::vector<MixSource> sources;
  std::optional<PretrainInjection> inject_pretrain;
  /// Length of the output stream. Default: every source record once, plus
  /// enough pretraining records to reach the injection fraction.
  std::optional<std::int64_t> total_records;

  void validate() const;
};

/// Per-stream record counts: largest-remainder apportionment of the total.
/// Index order is sources..., then the pretraining stream when present.
std::vector<std::int64_t> mix_counts(const MixSpec& spec);

/// Interleaves the streams by smooth weighted round-robin so every prefix of
/// the output is within one record of the target proportions. Records of a
/// stream are drawn from successive shuffled passes over that dataset.
std::vector<TripletRecord> build_posttrain_mix(const MixSpec& spec, Rng& rng);

}  // namespace liforge

// SPDX-License-Identifier: Apache-2.0
#include "liforge/triplets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "liforge/error.hpp"
#include "liforge/losses.hpp"

namespace liforge {

std::vector<TripletRecord> downsample_triplets(const std::vector<TripletRecord>& source, std::size_t n_triplets,
                                               std::size_t target_nway, Rng& rng) {
  if (source.size() < n_triplets) {
    throw std::invalid_argument("downsample_triplets: source has " + std::to_string(source.size()) +
                                " records, " + std::to_string(n_triplets) + " requested");
  }
  if (target_nway < 2) throw std::invalid_argument("downsample_triplets: target_nway must be >= 2");
  std::vector<TripletRecord> out;
  out.reserve(n_triplets);
  for (std::size_t idx : sample_without_replacement(rng, source.size(), n_triplets)) {
    const auto& rec = source[idx];
    if (rec.docs.size() < target_nway) {
      throw std::invalid_argument("downsample_triplets: record " + rec.query_id + " has " +
                                  std::to_string(rec.docs.size()) + " docs, fewer than target_nway");
    }
    TripletRecord kept{rec.query_id, rec.query_text, {rec.docs.front()}};
    for (std::size_t neg : sample_without_replacement(rng, rec.docs.size() - 1, target_nway - 1)) {
      kept.docs.push_back(rec.docs[neg + 1]);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

std::vector<double> ensemble_teacher_scores(const TripletRecord& record, const std::vector<std::string>& teachers) {
  if (teachers.empty()) throw std::invalid_argument("ensemble_teacher_scores: no teachers named");
  std::vector<double> avg(record.docs.size(), 0.0);
  for (const auto& teacher : teachers) {
    const auto raw = record.teacher_scores(teacher);
    const auto norm = minmax_normalize(raw);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += norm.values[i];
  }
  for (double& v : avg) v /= static_cast<double>(teachers.size());
  return avg;
}

std::vector<double> training_teacher_scores(const TripletRecord& record, const std::vector<std::string>& teachers) {
  if (teachers.size() == 1) return record.teacher_scores(teachers.front());
  return ensemble_teacher_scores(record, teachers);
}

void MixSpec::validate() const {
  if (sources.empty()) throw std::invalid_argument("mix: no source datasets");
  for (const auto& s : sources) {
    if (!(s.weight > 0.0)) throw std::invalid_argument("mix: weight of '" + s.name + "' must be > 0");
    if (s.records.empty()) throw DataError("mix: dataset '" + s.name + "' is empty");
  }
  if (inject_pretrain) {
    if (!(inject_pretrain->fraction >= 0.0 && inject_pretrain->fraction < 1.0)) {
      throw std::invalid_argument("mix: injection fraction must be in [0, 1)");
    }
    if (inject_pretrain->records.empty() && inject_pretrain->fraction > 0.0) {
      throw DataError("mix: pretraining dataset is empty");
    }
  }
  if (total_records && *total_records < 0) throw std::invalid_argument("mix: total_records must be >= 0");
}

std::vector<std::int64_t> mix_counts(const MixSpec& spec) {
  spec.validate();
  std::int64_t source_total = 0;
  for (const auto& s : spec.sources) source_total += static_cast<std::int64_t>(s.records.size());
  const double fraction = spec.inject_pretrain ? spec.inject_pretrain->fraction : 0.0;
  const std::int64_t total = spec.total_records
                                 ? *spec.total_records
                                 : std::llround(static_cast<double>(source_total) / (1.0 - fraction));
  const std::int64_t injected = std::llround(fraction * static_cast<double>(total));
  const std::int64_t main_total = total - injected;

  double weight_sum = 0.0;
  for (const auto& s : spec.sources) weight_sum += s.weight;
  std::vector<std::int64_t> counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    const double exact = static_cast<double>(main_total) * spec.sources[i].weight / weight_sum;
    const auto base = static_cast<std::int64_t>(std::floor(exact));
    counts.push_back(base);
    assigned += base;
    remainders.emplace_back(exact - static_cast<double>(base), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < main_total - assigned; ++r) {
    ++counts[remainders[static_cast<std::size_t>(r) % remainders.size()].second];
  }
  if (spec.inject_pretrain) counts.push_back(injected);
  return counts;
}

std::vector<TripletRecord> build_posttrain_mix(const MixSpec& spec, Rng& rng) {
  const auto counts = mix_counts(spec);
  std::vector<const std::vector<TripletRecord>*> pools;
  for (const auto& s : spec.sources) pools.push_back(&s.records);
  if (spec.inject_pretrain) pools.push_back(&spec.inject_pretrain->records);

  // Draw each stream's records up front: successive shuffled passes.
  std::vector<std::vector<std::size_t>> picks(pools.size());
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const std::size_t n = pools[i]->size();
    while (static_cast<std::int64_t>(picks[i].size()) < counts[i]) {
      std::vector<std::size_t> pass(n);
      std::iota(pass.begin(), pass.end(), std::size_t{0});
      rng.shuffle(pass);
      const auto need = static_cast<std::size_t>(counts[i]) - picks[i].size();
      picks[i].insert(picks[i].end(), pass.begin(), pass.begin() + static_cast<std::ptrdiff_t>(std::min(need, n)));
    }
  }

  const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  std::vector<std::int64_t> emitted(pools.size(), 0);
  std::vector<TripletRecord> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::int64_t pos = 0; pos < total; ++pos) {
    std::size_t best = pools.size();
    double best_deficit = 0.0;
    for (std::size_t i = 0; i < pools.size(); ++i) {
      if (emitted[i] >= counts[i]) continue;
      const double deficit = static_cast<double>(pos + 1) * static_cast<double>(counts[i]) / static_cast<double>(total) -
                             static_cast<double>(emitted[i]);
      if (best == pools.size() || deficit > best_deficit) {
        best = i;
        best_deficit = deficit;
      }
    }
    out.push_back((*pools[best])[picks[best][static_cast<std::size_t>(emitted[best])]]);
    ++emitted[best];
  }
  return out;
}

}  // namespace liforge

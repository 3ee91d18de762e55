// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace liforge {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t element_count() const;
  bool operator==(const Tensor& other) const = default;
};

struct CheckpointMeta {
  std::int64_t step = 0;
  std::int64_t seed = 0;
  std::string config_digest;
  /// Steps of the checkpoints an averaged checkpoint was built from.
  std::vector<std::int64_t> source_steps;

  bool operator==(const CheckpointMeta& other) const = default;
};

/// Named float32 tensors plus training metadata.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  CheckpointMeta meta;
};

/// Bitwise comparison of tensors (so -0.0 != +0.0) and exact meta equality.
bool bitwise_equal(const Checkpoint& a, const Checkpoint& b);

/// File layout:
///   bytes 0..7   magic "LIFORGE1"
///   bytes 8..15  header length H, little-endian u64
///   next H bytes UTF-8 JSON header:
///                {"meta": {...}, "tensors": [{"name", "shape", "offset"}, ...]}
///                offsets are byte offsets into the payload, tensors in name order
///   payload      float32 little-endian values, contiguous in header order
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Same encoding to/from memory.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Elementwise arithmetic mean of same-named, same-shaped tensors. The
/// per-element sum runs over the values in sorted order, so the result does
/// not depend on the order of `ckpts`.
Checkpoint average_checkpoints(const std::vector<Checkpoint>& ckpts);

}  // namespace liforge

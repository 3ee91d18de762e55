// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "liforge/checkpoint.hpp"
#include "liforge/rng.hpp"
#include "liforge/scoring.hpp"
#include "liforge/types.hpp"

namespace liforge {

/// Toy late-interaction encoder: embedding lookup, optional single-head
/// self-attention (no positions, no residual), linear projection, row
/// normalization.
struct EncoderConfig {
  int vocab_size = 0;
  int hidden = 32;
  int out_dim = 32;
  bool mixer = true;
  AugmentationMode aug_mode = DynamicLength{};
  int max_doc_len = 300;

  void validate() const;
};

/// Tensor names used in checkpoints.
inline constexpr const char* kEmbName = "emb";
inline constexpr const char* kAttQName = "att_q";
inline constexpr const char* kAttKName = "att_k";
inline constexpr const char* kAttVName = "att_v";
inline constexpr const char* kProjName = "proj";

struct EncoderParams {
  Matrix emb;    // V x h
  Matrix att_q;  // h x h, empty without mixer
  Matrix att_k;
  Matrix att_v;
  Matrix proj;   // h x d

  /// Seeded init: emb/proj ~ U(-1/sqrt(h), 1/sqrt(h)), attention ~ U(-1/h, 1/h).
  static EncoderParams init(const EncoderConfig& cfg, Rng& rng);
  /// Same shapes, all zeros.
  static EncoderParams zeros(const EncoderConfig& cfg);
  EncoderParams zeros_like() const;

  bool has_mixer() const noexcept { return att_q.size() > 0; }

  /// Tensor names and mutable flat views, in fixed order (emb, att_*, proj).
  std::vector<std::string> names() const;
  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;

  EncoderParams& operator+=(const EncoderParams& other);
  EncoderParams& operator*=(double scale);

  /// Float32 tensor map for checkpoints.
  std::map<std::string, Tensor> to_tensors() const;
  /// Rebuilds params from a checkpoint; shapes must match `cfg`.
  static EncoderParams from_tensors(const std::map<std::string, Tensor>& tensors, const EncoderConfig& cfg);
};

/// Intermediate values of one forward pass, kept for the backward pass.
struct EncoderForward {
  TokenIds tokens;
  Matrix x;     // m x h embeddings
  Matrix q, k, v;
  Matrix attn;  // m x m row-softmax
  Matrix h;     // mixer output (or x)
  Matrix y;     // m x d raw projection
  Vector norms;
  EmbeddingMatrix out;
};

EncoderForward encode_forward(const TokenIds& tokens, const EncoderParams& params, const EncoderConfig& cfg,
                              bool is_query);

EmbeddingMatrix encode(const TokenIds& tokens, const EncoderParams& params, const EncoderConfig& cfg,
                       bool is_query);

/// Adds d(sum(upstream .* out))/d(params) into `grads`.
void encode_backward_into(const EncoderForward& fwd, const EncoderParams& params, const Matrix& upstream,
                          EncoderParams& grads);

EncoderParams encode_backward(const TokenIds& tokens, const EncoderParams& params, const EncoderConfig& cfg,
                              bool is_query, const Matrix& upstream);

/// Marker + augmentation for queries.
TokenIds prepare_query(const TokenIds& tokens, const EncoderConfig& cfg);
/// [D] marker + tokens, truncated to max_doc_len in total.
TokenIds prepare_document(const TokenIds& tokens, const EncoderConfig& cfg);

}  // namespace liforge

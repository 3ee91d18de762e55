// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "liforge/encoder.hpp"
#include "liforge/vocab.hpp"
#include "support.hpp"

using namespace liforge;

namespace {

EncoderConfig small_config(bool mixer) {
  EncoderConfig cfg;
  cfg.vocab_size = 20;
  cfg.hidden = 6;
  cfg.out_dim = 5;
  cfg.mixer = mixer;
  return cfg;
}

}  // namespace

TEST(Encoder, RowsAreUnitNorm) {
  Rng rng(1);
  for (bool mixer : {false, true}) {
    const auto cfg = small_config(mixer);
    const auto params = EncoderParams::init(cfg, rng);
    const auto out = encode(prepare_query({7, 8, 9}, cfg), params, cfg, true);
    EXPECT_TRUE(out.normalized());
    EXPECT_EQ(out.rows(), 32);
    for (Eigen::Index i = 0; i < out.rows(); ++i) EXPECT_NEAR(out.data().row(i).norm(), 1.0, 1e-6);
  }
}

TEST(Encoder, LookupWithoutMixer) {
  Rng rng(2);
  const auto cfg = small_config(false);
  const auto params = EncoderParams::init(cfg, rng);
  const auto out = encode({7, 7}, params, cfg, false);
  EXPECT_EQ(out.data().row(0), out.data().row(1));
}

TEST(Encoder, MixerIsPermutationEquivariant) {
  Rng rng(3);
  const auto cfg = small_config(true);
  for (int t = 0; t < 10; ++t) {
    const auto params = EncoderParams::init(cfg, rng);
    const TokenIds toks{4, 9, 12, 5, 17};
    const TokenIds perm{17, 5, 4, 12, 9};  // positions 4,3,0,2,1
    const auto a = encode(toks, params, cfg, false).data();
    const auto b = encode(perm, params, cfg, false).data();
    const int src[] = {4, 3, 0, 2, 1};
    for (int i = 0; i < 5; ++i) EXPECT_LT((b.row(i) - a.row(src[i])).norm(), 1e-12);
  }
}

TEST(Encoder, ProjectionScaleIsAbsorbed) {
  Rng rng(4);
  for (bool mixer : {false, true}) {
    const auto cfg = small_config(mixer);
    auto params = EncoderParams::init(cfg, rng);
    const TokenIds toks{4, 8, 9, 1, 1};
    const auto a = encode(toks, params, cfg, true).data();
    params.proj *= 3.7;
    const auto b = encode(toks, params, cfg, true).data();
    EXPECT_LT((a - b).norm(), 1e-12);
  }
}

TEST(Encoder, MaskRowsAreContextualOnlyWithMixer) {
  Rng rng(5);
  for (bool mixer : {false, true}) {
    const auto cfg = small_config(mixer);
    const auto params = EncoderParams::init(cfg, rng);
    const auto a = encode({3, 7, 1, 1}, params, cfg, true).data();
    const auto b = encode({3, 15, 1, 1}, params, cfg, true).data();
    const double diff = (a.row(2) - b.row(2)).norm();
    if (mixer) {
      EXPECT_GT(diff, 1e-6);
    } else {
      EXPECT_EQ(diff, 0.0);
    }
  }
}

TEST(Encoder, Errors) {
  Rng rng(6);
  auto cfg = small_config(true);
  const auto params = EncoderParams::init(cfg, rng);
  EXPECT_THROW(encode({3, 20}, params, cfg, true), std::invalid_argument);
  EXPECT_THROW(encode({}, params, cfg, true), std::invalid_argument);
  EXPECT_THROW(encode_backward({3, 5}, params, cfg, true, Matrix::Zero(3, 5)), std::invalid_argument);
  cfg.max_doc_len = 3;
  EXPECT_THROW(encode({4, 5, 6, 7}, params, cfg, false), std::invalid_argument);
  EXPECT_EQ(prepare_document({5, 6, 7, 8, 9}, cfg).size(), 3u);
  EXPECT_EQ(prepare_document({5, 6}, cfg)[0], Vocab::kDocMarker);
}

TEST(Encoder, ZeroUpstreamGivesZeroGradients) {
  Rng rng(7);
  const auto cfg = small_config(true);
  const auto params = EncoderParams::init(cfg, rng);
  const auto g = encode_backward({3, 6, 1}, params, cfg, true, Matrix::Zero(3, 5));
  for (const auto& v : g.views())
    for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(Encoder, SingleTokenGradientIsSparse) {
  Rng rng(8);
  const auto cfg = small_config(false);
  const auto params = EncoderParams::init(cfg, rng);
  const auto g = encode_backward({9}, params, cfg, false, support::random_rows(rng, 1, 5));
  for (Eigen::Index r = 0; r < g.emb.rows(); ++r) {
    if (r == 9) {
      EXPECT_GT(g.emb.row(r).norm(), 0.0);
    } else {
      EXPECT_EQ(g.emb.row(r).norm(), 0.0);
    }
  }
  EXPECT_GT(g.proj.norm(), 0.0);
  EXPECT_EQ(g.att_q.size(), 0);
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
  Rng rng(9);
  for (bool mixer : {false, true}) {
    for (bool is_query : {false, true}) {
      for (int i = 0; i < 20; ++i) {
        const double err = support::encoder_grad_error(rng, mixer, is_query);
        ASSERT_LT(err, 1e-4) << "mixer=" << mixer << " query=" << is_query << " instance " << i;
      }
    }
  }
}

TEST(Encoder, CheckpointTensorsRoundTrip) {
  Rng rng(10);
  const auto cfg = small_config(true);
  const auto params = EncoderParams::init(cfg, rng);
  const auto tensors = params.to_tensors();
  EXPECT_EQ(tensors.size(), 5u);
  for (const char* n : {"emb", "att_q", "att_k", "att_v", "proj"}) EXPECT_TRUE(tensors.count(n)) << n;
  const auto back = EncoderParams::from_tensors(tensors, cfg);
  // float32 storage
  EXPECT_LT((back.emb - params.emb).cwiseAbs().maxCoeff(), 1e-6);
  auto wrong = small_config(false);
  EXPECT_THROW(EncoderParams::from_tensors(tensors, wrong), std::invalid_argument);
}

/* Copyright 2026 The StreamThink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "generators.h"
#include "streaming.h"
#include "streamthink/engine.h"
#include "streamthink/error.h"

namespace streamthink {
namespace {

using testing::Gen;
using testing::StreamingOrder;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

TEST(MaskedSoftmax, NormalizesOverAllowedEntries) {
  const std::vector<double> scores{1.0, 1000.0, 2.0, -3.0};
  const std::vector<std::uint8_t> allowed{1, 0, 1, 1};
  const auto p = masked_softmax(scores, allowed);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(p[2] / p[0], std::exp(1.0), 1e-12);
}

TEST(MaskedSoftmax, Errors) {
  const std::vector<double> scores{1.0, 2.0};
  const std::vector<std::uint8_t> none{0, 0};
  const std::vector<std::uint8_t> short_mask{1};
  EXPECT_EQ(code_of([&] { masked_softmax(scores, none); }), ErrorCode::kUnsupportedShape);
  EXPECT_EQ(code_of([&] { masked_softmax(scores, short_mask); }), ErrorCode::kDimensionMismatch);
}

TEST(ArgmaxLowest, TiesGoToLowestId) {
  const std::vector<double> logits{0.5, 2.0, -1.0, 2.0};
  EXPECT_EQ(argmax_lowest(logits), 1);
}

TEST(EngineConfig, Validation) {
  EngineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.head_dim = 7;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidConfig);
  c = {};
  c.n_layers = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidConfig);
  c = {};
  c.rope = RopeConfig::with_default_bands(10);
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidConfig);
  c = {};
  c.rope = RopeConfig{8, {0, 0, 8}, 100.0};
  EXPECT_NO_THROW(Engine{c});
}

TEST(Engine, SameSeedSameOutputs) {
  const auto s = testing::seven_unit_stream();
  EngineConfig c;
  c.seed = 42;
  const std::vector<std::vector<TokenId>> gen{{1, 2}, {3}};
  const auto a = init_engine(c).forward_monolithic(s, gen, WithinReceived::kCausal);
  const auto b = init_engine(c).forward_monolithic(s, gen, WithinReceived::kCausal);
  EXPECT_EQ(a.logits, b.logits);
  c.seed = 43;
  const auto d = init_engine(c).forward_monolithic(s, gen, WithinReceived::kCausal);
  EXPECT_NE(a.logits, d.logits);
}

TEST(Engine, StreamingMatchesMonolithic) {
  Gen g(21);
  testing::StreamShape shape;
  shape.max_units = 6;
  shape.max_unit_tokens = 5;
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = testing::random_stream(g, shape);
    const Engine engine(testing::random_engine_config(g, 32, 2));
    const auto lens = testing::random_lengths(g, g.uniform(0, s.size()), 0, 4);
    const auto gen = testing::random_tokens(g, lens, engine.config().vocab_size);
    const auto within = g.coin() ? WithinReceived::kFull : WithinReceived::kCausal;
    const auto mono = engine.forward_monolithic(s, gen, within);
    for (auto order : {StreamingOrder::kInterleaved, StreamingOrder::kIngestFirst}) {
      const auto streamed = testing::streaming_logits(engine, s, gen, within, order);
      EXPECT_LE(testing::max_row_relative_error(streamed, mono.logits), 1e-9);
    }
  }
}

TEST(Engine, StreamingOrderDoesNotChangeLogits) {
  const auto s = testing::seven_unit_stream();
  const Engine engine(EngineConfig{});
  const std::vector<std::vector<TokenId>> gen{{1, 2}, {3, 4, 5}, {6, 7}, {8}, {}, {9}, {10, 11}};
  EXPECT_EQ(testing::streaming_logits(engine, s, gen, WithinReceived::kCausal,
                                      StreamingOrder::kInterleaved),
            testing::streaming_logits(engine, s, gen, WithinReceived::kCausal,
                                      StreamingOrder::kIngestFirst));
}

TEST(Engine, FutureReceivedUnitsCannotLeak) {
  Gen g(22);
  for (int trial = 0; trial < 30; ++trial) {
    testing::StreamShape shape;
    shape.min_units = 2;
    shape.max_units = 7;
    const auto s = testing::random_stream(g, shape);
    const Engine engine(testing::random_engine_config(g, 24, 2));
    const auto lens = testing::random_lengths(g, s.size(), 1, 3);
    const auto gen = testing::random_tokens(g, lens, engine.config().vocab_size);
    const int future = g.uniform(2, s.size());

    EmbeddingOverrides ov;
    auto emb = engine.embed_received(s.unit(future));
    for (auto& x : emb.data) x += g.real(-3, 3);
    ov.emplace(future, emb);

    const auto base = engine.forward_monolithic(s, gen, WithinReceived::kFull);
    const auto pert = engine.forward_monolithic(s, gen, WithinReceived::kFull, &ov);
    const TokenLayout& layout = base.layout;
    for (int u = 1; u < future; ++u) {
      for (auto ref : {UnitRef::received(u), UnitRef::generated(u)}) {
        const int b = layout.begin(ref);
        for (int r = b; r < b + layout.length(ref); ++r) {
          for (int c = 0; c < base.logits.cols; ++c) {
            ASSERT_EQ(base.logits.at(r, c), pert.logits.at(r, c)) << "unit " << u;
          }
        }
      }
    }
    // The perturbed unit's own rows do move.
    const int b = layout.begin(UnitRef::received(future));
    bool moved = false;
    for (int c = 0; c < base.logits.cols; ++c) moved |= base.logits.at(b, c) != pert.logits.at(b, c);
    EXPECT_TRUE(moved);
  }
}

TEST(Engine, GreedyDecodingFollowsArgmax) {
  const auto s = testing::seven_unit_stream();
  const Engine engine(EngineConfig{});
  const std::vector<int> lens{5};
  const auto offsets = compute_offsets(s, lens);
  DualKvCache cache(engine.config().n_layers, engine.config().model_dim());
  engine.ingest_segment(cache, s.unit(1), offsets, WithinReceived::kCausal);
  const auto r = engine.decode_generated_unit(cache, 1, 5, offsets, Greedy{7});
  ASSERT_EQ(r.tokens.size(), 5u);
  EXPECT_EQ(r.tokens[0], 7);
  for (int i = 1; i < 5; ++i) EXPECT_EQ(r.tokens[i], argmax_lowest(r.logits.row(i - 1)));
}

TEST(Engine, DecodeRejectsBadState) {
  const auto s = testing::seven_unit_stream();
  const Engine engine(EngineConfig{});
  const std::vector<int> lens{1, 1};
  const auto offsets = compute_offsets(s, lens);
  DualKvCache cache(engine.config().n_layers, engine.config().model_dim());
  EXPECT_EQ(code_of([&] { engine.decode_generated_unit(cache, 1, 1, offsets, Greedy{}); }),
            ErrorCode::kSnapshotTooShort);
  engine.ingest_segment(cache, s.unit(1), offsets, WithinReceived::kCausal);
  engine.ingest_segment(cache, s.unit(2), offsets, WithinReceived::kCausal);
  EXPECT_EQ(code_of([&] {
              engine.decode_generated_unit(cache, cache.snapshot(2), 1, 1, offsets, Greedy{});
            }),
            ErrorCode::kSnapshotTooLong);
  EXPECT_EQ(code_of([&] { engine.decode_generated_unit(cache, 2, 1, offsets, Greedy{}); }),
            ErrorCode::kOutOfOrderDecode);
  EXPECT_EQ(code_of([&] { engine.decode_generated_unit(cache, 1, 2, offsets, Teacher{{1}}); }),
            ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([&] { engine.ingest_segment(cache, s.unit(4), offsets, WithinReceived::kCausal); }),
            ErrorCode::kOutOfOrderIngest);
  DualKvCache other(1, engine.config().model_dim());
  EXPECT_EQ(code_of([&] { engine.ingest_segment(other, s.unit(1), offsets, WithinReceived::kCausal); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Engine, MonolithicRejectsTooManyGeneratedUnits) {
  const std::vector<UnitDescriptor> d{UnitDescriptor::segment({1, 1, 1})};
  const auto s = build_stream(d);
  const Engine engine(EngineConfig{});
  const std::vector<std::vector<TokenId>> gen{{1}, {2}};
  EXPECT_THROW(engine.forward_monolithic(s, gen, WithinReceived::kCausal), Error);
}

}  // namespace
}  // namespace streamthink

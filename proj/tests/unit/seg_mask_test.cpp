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

#include "generators.h"
#include "oracles.h"
#include "streamthink/error.h"
#include "streamthink/seg_mask.h"

namespace streamthink {
namespace {

using testing::Gen;

TEST(SegMask, UnitLevelMatchesOracle) {
  for (int n = 1; n <= 9; ++n) {
    const SegMask mask(n);
    const auto dense = mask.dense();
    ASSERT_EQ(dense.size(), static_cast<std::size_t>(4 * n * n));
    for (int q = 0; q < 2 * n; ++q) {
      for (int k = 0; k < 2 * n; ++k) {
        const bool want = testing::oracle_unit_allowed(n, q, k);
        EXPECT_EQ(dense[static_cast<std::size_t>(q * 2 * n + k)] != 0, want);
        const auto ref = [n](int i) {
          return i < n ? UnitRef::received(i + 1) : UnitRef::generated(i - n + 1);
        };
        EXPECT_EQ(mask.allows(ref(q), ref(k)), want);
      }
    }
  }
}

TEST(SegMask, ReceivedNeverReadsGenerated) {
  const SegMask mask(6);
  for (int u = 1; u <= 6; ++u) {
    for (int k = 1; k <= 6; ++k) {
      EXPECT_FALSE(mask.allows(UnitRef::received(u), UnitRef::generated(k)));
    }
  }
}

TEST(SegMask, SevenUnitGeneratedRows) {
  const auto s = testing::seven_unit_stream();
  const auto mask = build_seg_mask(s);
  // Received units visible to C_u are exactly R_1..R_u.
  for (int u = 1; u <= 7; ++u) {
    for (int v = 1; v <= 7; ++v) {
      EXPECT_EQ(mask.allows(UnitRef::generated(u), UnitRef::received(v)), v <= u);
      EXPECT_EQ(mask.allows(UnitRef::generated(u), UnitRef::generated(v)), v <= u);
    }
  }
}

TEST(SegMask, EmptyAndNegativeCounts) {
  EXPECT_TRUE(SegMask(0).dense().empty());
  EXPECT_THROW(SegMask(-1), Error);
}

void expect_matches_oracle(const UnitStream& s, const std::vector<int>& lens,
                           WithinReceived within) {
  const auto mask = build_seg_mask(s);
  const auto tm = expand_token_mask(mask, s, within, lens);
  const auto tokens = testing::oracle_tokens(s, lens);
  ASSERT_EQ(tm.k_len(), static_cast<int>(tokens.size()));
  ASSERT_EQ(tm.q_len(), tm.k_len());
  const bool full = within == WithinReceived::kFull;
  for (int q = 0; q < tm.k_len(); ++q) {
    for (int k = 0; k < tm.k_len(); ++k) {
      ASSERT_EQ(tm.allowed(q, k), testing::oracle_allowed(tokens[q], tokens[k], full))
          << "q=" << q << " k=" << k;
      ASSERT_EQ(token_allowed(mask, tm.layout(), within, q, k), tm.allowed(q, k));
    }
  }
}

TEST(TokenMask, RandomStreamsMatchOracle) {
  Gen g(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = testing::random_stream(g, {});
    const int n = g.uniform(0, s.size());
    const auto lens = testing::random_lengths(g, n, 0, 5);
    expect_matches_oracle(s, lens, g.coin() ? WithinReceived::kFull : WithinReceived::kCausal);
  }
}

TEST(TokenMask, SevenUnitFixtureBothWithinModes) {
  const auto s = testing::seven_unit_stream();
  const std::vector<int> lens{2, 3, 2, 3, 2, 2, 3};
  expect_matches_oracle(s, lens, WithinReceived::kCausal);
  expect_matches_oracle(s, lens, WithinReceived::kFull);
}

TEST(TokenMask, GeneratedFromStreamEqualsExplicitLengths) {
  auto s = testing::seven_unit_stream();
  s.append_generated({1, GeneratedKind::kMemoryNote, {1, 2}, 0});
  s.append_generated({2, GeneratedKind::kQaOutput, {3, 4, 5}, 0});
  const auto mask = build_seg_mask(s);
  const std::vector<int> lens{2, 3};
  const auto a = expand_token_mask(mask, s, WithinReceived::kCausal);
  const auto b = expand_token_mask(mask, s, WithinReceived::kCausal, lens);
  ASSERT_EQ(a.k_len(), b.k_len());
  for (int q = 0; q < a.k_len(); ++q) {
    for (int k = 0; k < a.k_len(); ++k) EXPECT_EQ(a.allowed(q, k), b.allowed(q, k));
  }
}

TEST(TokenMask, UnitRowsAreASliceOfTheFullMask) {
  Gen g(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = testing::random_stream(g, {});
    const auto lens = testing::random_lengths(g, s.size(), 1, 4);
    const auto mask = build_seg_mask(s);
    const auto full = expand_token_mask(mask, s, WithinReceived::kCausal, lens);
    const int u = g.uniform(1, s.size());
    const auto ref = g.coin() ? UnitRef::generated(u) : UnitRef::received(u);
    const auto rows = expand_unit_rows(mask, s, WithinReceived::kCausal, lens, ref);
    EXPECT_EQ(rows.row_begin(), full.layout().begin(ref));
    EXPECT_EQ(rows.q_len(), full.layout().length(ref));
    for (int q = rows.row_begin(); q < rows.row_begin() + rows.q_len(); ++q) {
      for (int k = 0; k < full.k_len(); ++k) EXPECT_EQ(rows.allowed(q, k), full.allowed(q, k));
    }
  }
}

TEST(TokenLayout, OrderAndOrigins) {
  const auto s = testing::seven_unit_stream();
  const std::vector<int> lens{2, 0, 1};
  const TokenLayout layout(s, lens);
  EXPECT_EQ(layout.received_tokens(), 41);
  EXPECT_EQ(layout.size(), 44);
  EXPECT_EQ(layout.generated_units(), 3);
  EXPECT_EQ(layout.begin(UnitRef::received(2)), 8);
  EXPECT_EQ(layout.length(UnitRef::received(2)), 3);
  EXPECT_EQ(layout.begin(UnitRef::generated(3)), 43);
  EXPECT_EQ(layout.length(UnitRef::generated(2)), 0);
  EXPECT_EQ(layout.origin(42), (TokenOrigin{UnitRef::generated(1), 1}));
}

TEST(TokenLayout, RejectsTooManyGeneratedUnits) {
  const auto s = testing::seven_unit_stream();
  const std::vector<int> lens(8, 1);
  EXPECT_THROW(TokenLayout(s, lens), Error);
  const std::vector<int> negative{1, -2};
  EXPECT_THROW(TokenLayout(s, negative), Error);
}

struct ClassifyCase {
  std::int64_t q, k;
  bool dense_causal;
  BackendClass want;
};

TEST(ClassifyAttention, Table) {
  const std::vector<ClassifyCase> cases{
      {1, 1, true, BackendClass::kSingleTokenDecode},
      {1, 1, false, BackendClass::kSingleTokenDecode},
      {1, 40, false, BackendClass::kSingleTokenDecode},
      {16, 16, true, BackendClass::kDenseCausalPrefill},
      {16, 16, false, BackendClass::kMaskedChunk},
      {4, 20, true, BackendClass::kMaskedChunk},
      {4, 20, false, BackendClass::kMaskedChunk},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(classify_attention(c.q, c.k, c.dense_causal), c.want) << c.q << "x" << c.k;
  }
}

TEST(ClassifyAttention, RejectsBadShapes) {
  for (const auto& [q, k] : std::vector<std::pair<int, int>>{{0, 4}, {-1, 4}, {5, 4}}) {
    try {
      classify_attention(q, k, true);
      ADD_FAILURE() << q << "x" << k;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnsupportedShape);
    }
  }
}

}  // namespace
}  // namespace streamthink

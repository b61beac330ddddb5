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

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "streamthink/stream_model.h"

namespace streamthink {

// Decoupled base offsets.  Input offsets accumulate unit spans over the
// received prefix; output offsets accumulate generated lengths from zero.
struct OffsetTable {
  std::vector<std::int64_t> seg_offsets;       // B_k^S, k = 1..S
  std::vector<std::int64_t> question_offsets;  // B_k^Q, k = 1..Q
  std::vector<std::int64_t> gen_offsets;       // B_k^C, k = 1..n
  std::vector<int> gen_lens;                   // L[C_k], k = 1..n
  std::vector<std::int64_t> unit_offsets;      // base offset by arrival index
  std::int64_t input_budget = 0;               // sum of all unit spans

  std::int64_t received_offset(int arrival_index) const {
    return unit_offsets.at(static_cast<std::size_t>(arrival_index - 1));
  }
  std::int64_t generated_offset(int k) const {
    return gen_offsets.at(static_cast<std::size_t>(k - 1));
  }
  bool operator==(const OffsetTable&) const = default;
};

OffsetTable compute_offsets(const UnitStream& stream,
                            std::span<const int> generated_lens);

// Output-stream offsets only; they never depend on received units.
std::vector<std::int64_t> generated_offsets(std::span<const int> generated_lens);

struct TokenPosition {
  std::int64_t t = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  static TokenPosition text(std::int64_t p) { return {p, p, p}; }
  bool operator==(const TokenPosition&) const = default;
};

// Positions of a received unit's tokens.  Visual tokens are walked
// t-major, then h, then w.
std::vector<TokenPosition> received_positions(const ReceivedUnit& unit,
                                              std::int64_t base);
std::vector<TokenPosition> generated_positions(std::int64_t base, int length);

struct PositionAssignment {
  std::vector<TokenPosition> received;   // concatenated R_1..R_U
  std::vector<TokenPosition> generated;  // concatenated C_1..C_n
};

PositionAssignment assign_positions(const UnitStream& stream,
                                    const OffsetTable& offsets);

struct RopeConfig {
  int head_dim = 0;
  // Rotary dimensions allotted to the (t, h, w) axes.
  std::array<int, 3> axis_bands{0, 0, 0};
  double base_theta = 10000.0;

  // Bands as equal as possible in whole pairs; extra pairs go to t, then h.
  static RopeConfig with_default_bands(int head_dim,
                                       double base_theta = 10000.0);
  // Throws kInvalidConfig.
  void validate() const;
  bool operator==(const RopeConfig&) const = default;
};

std::vector<double> apply_rope(std::span<const double> vec,
                               const TokenPosition& position,
                               const RopeConfig& config);

// Rotates `vec` in place; the caller guarantees vec.size() == head_dim.
void rotate_in_place(std::span<double> vec,
                     const TokenPosition& position,
                     const RopeConfig& config);

}  // namespace streamthink

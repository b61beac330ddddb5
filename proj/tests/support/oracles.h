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

// Reference computations written directly from the definitions, sharing no
// code with the library beyond its plain data types.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "streamthink/stream_model.h"

namespace streamthink::testing {

struct OracleToken {
  bool generated = false;
  int unit = 0;   // 1-based arrival index
  int local = 0;  // 0-based position inside the unit
};

// All received tokens in arrival order, then C_1..C_n.
std::vector<OracleToken> oracle_tokens(const UnitStream& stream, std::span<const int> gen_lens);

// Query token q may read key token k.
bool oracle_allowed(const OracleToken& q, const OracleToken& k, bool full_within_received);

// Unit level: rows/cols 0..U-1 are R_1..R_U, U..2U-1 are C_1..C_U.
bool oracle_unit_allowed(int n_units, int query, int key);

std::int64_t oracle_span(const ReceivedUnit& unit);
// Base offset of every received unit, by arrival index.
std::vector<std::int64_t> oracle_received_offsets(const UnitStream& stream);
std::vector<std::int64_t> oracle_generated_offsets(std::span<const int> gen_lens);

// (t, h, w) of every token of a received unit placed at `base`.
std::vector<std::array<std::int64_t, 3>> oracle_positions(const ReceivedUnit& unit,
                                                          std::int64_t base);

// Rotates consecutive pairs inside each axis band as complex numbers.
std::vector<double> oracle_rope(std::span<const double> x, std::array<std::int64_t, 3> pos,
                                std::array<int, 3> bands, double theta);

// Recursive tiler: cut at every question time, then peel chunk-length pieces
// off any interval longer than the limit.
std::vector<std::pair<double, double>> oracle_segments(double duration,
                                                       std::span<const double> question_times,
                                                       double limit, double chunk);

enum class OracleMode { kInterleaved, kDecoupled, kBatch };

// Tick-by-tick replay of the two work tracks.  Returns, per question turn,
// the clock of its first answer token minus its arrival clock.
std::vector<std::int64_t> oracle_ttft(const UnitStream& stream, OracleMode mode,
                                      std::span<const int> gen_lens,
                                      std::span<const std::int64_t> arrivals,
                                      std::span<const int> rationale_lens);

}  // namespace streamthink::testing

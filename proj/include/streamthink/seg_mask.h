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

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "streamthink/stream_model.h"

namespace streamthink {

enum class StreamSide { kReceived, kGenerated };

// Attention rule between tokens of the same received unit.  Generated units
// are always causal internally.
enum class WithinReceived { kCausal, kFull };

std::string_view within_received_name(WithinReceived mode);

struct UnitRef {
  StreamSide side = StreamSide::kReceived;
  int index = 0;  // 1-based arrival index u

  static UnitRef received(int u) { return {StreamSide::kReceived, u}; }
  static UnitRef generated(int u) { return {StreamSide::kGenerated, u}; }
  bool operator==(const UnitRef&) const = default;
};

// Unit-level streaming causal mask over <R_1..R_U, C_1..C_U>:
//   R_u -> R_v  iff v <= u
//   C_u -> R_v  iff v <= u
//   C_u -> C_k  iff k <= u
//   R_u -> C_k  never
class SegMask {
 public:
  explicit SegMask(int n_units);

  int n_units() const { return n_units_; }
  bool allows(UnitRef query, UnitRef key) const;

  // Dense 2U x 2U row-major table; row/column i < U is R_{i+1}, i >= U is
  // C_{i-U+1}.
  std::vector<std::uint8_t> dense() const;

 private:
  int n_units_;
};

SegMask build_seg_mask(const UnitStream& stream);

// Where a token of the concatenated sequence comes from.
struct TokenOrigin {
  UnitRef unit;
  int local = 0;  // 0-based offset inside the unit
  bool operator==(const TokenOrigin&) const = default;
};

// Token provenance of <R_1..R_U, C_1..C_n> for n = generated_lens.size().
class TokenLayout {
 public:
  TokenLayout(const UnitStream& stream, std::span<const int> generated_lens);

  int size() const { return static_cast<int>(origins_.size()); }
  int received_tokens() const { return received_tokens_; }
  int generated_units() const { return static_cast<int>(gen_begin_.size()); }
  const TokenOrigin& origin(int token) const {
    return origins_[static_cast<std::size_t>(token)];
  }
  const std::vector<TokenOrigin>& origins() const { return origins_; }
  // First token and token count of a unit inside the concatenated sequence.
  int begin(UnitRef unit) const;
  int length(UnitRef unit) const;

 private:
  std::vector<TokenOrigin> origins_;
  std::vector<int> recv_begin_;
  std::vector<int> recv_len_;
  std::vector<int> gen_begin_;
  std::vector<int> gen_len_;
  int received_tokens_ = 0;
};

// Predicate form of the token-level mask.
bool token_allowed(const SegMask& mask,
                   const TokenLayout& layout,
                   WithinReceived within,
                   int query_token,
                   int key_token);

// Dense token-level mask.  Holds rows [row_begin, row_begin + q_len) of the
// full square mask; every row spans all k_len key tokens.
class TokenMask {
 public:
  TokenMask(TokenLayout layout, int row_begin, int row_end,
            std::vector<std::uint8_t> bits);

  int q_len() const { return row_end_ - row_begin_; }
  int k_len() const { return layout_.size(); }
  int row_begin() const { return row_begin_; }
  const TokenLayout& layout() const { return layout_; }

  // Absolute query token index, in [row_begin, row_begin + q_len).
  bool allowed(int query_token, int key_token) const {
    return bits_[static_cast<std::size_t>(query_token - row_begin_) *
                     static_cast<std::size_t>(k_len()) +
                 static_cast<std::size_t>(key_token)] != 0;
  }
  std::span<const std::uint8_t> row(int query_token) const {
    return std::span<const std::uint8_t>(bits_).subspan(
        static_cast<std::size_t>(query_token - row_begin_) *
            static_cast<std::size_t>(k_len()),
        static_cast<std::size_t>(k_len()));
  }

 private:
  TokenLayout layout_;
  int row_begin_;
  int row_end_;
  std::vector<std::uint8_t> bits_;
};

// Expands over all received units and the generated units present in
// `stream.generated`.
TokenMask expand_token_mask(const SegMask& mask,
                            const UnitStream& stream,
                            WithinReceived within = WithinReceived::kCausal);

// Expands with explicit generated lengths, one per generated unit to include.
// A negative length means the unit's length is not known yet.
TokenMask expand_token_mask(const SegMask& mask,
                            const UnitStream& stream,
                            WithinReceived within,
                            std::span<const int> generated_lens);

// Materializes only the rows of one unit (e.g. C_u while decoding it).
TokenMask expand_unit_rows(const SegMask& mask,
                           const UnitStream& stream,
                           WithinReceived within,
                           std::span<const int> generated_lens,
                           UnitRef query_unit);

enum class BackendClass { kDenseCausalPrefill, kSingleTokenDecode, kMaskedChunk };

std::string_view backend_class_name(BackendClass c);

// q_len == 1 takes precedence over the prefill rule; a square call whose
// mask is not dense causal needs the explicit mask path.
BackendClass classify_attention(std::int64_t q_len,
                                std::int64_t k_len,
                                bool mask_is_dense_causal);

}  // namespace streamthink

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

#include "streamthink/seg_mask.h"

#include <string>

#include "streamthink/error.h"

namespace streamthink {

std::string_view within_received_name(WithinReceived mode) {
  return mode == WithinReceived::kCausal ? "causal" : "full";
}

SegMask::SegMask(int n_units) : n_units_(n_units) {
  if (n_units < 0) {
    throw Error(ErrorCode::kLengthMismatch, "negative unit count");
  }
}

bool SegMask::allows(UnitRef query, UnitRef key) const {
  if (query.side == StreamSide::kReceived) {
    return key.side == StreamSide::kReceived && key.index <= query.index;
  }
  return key.index <= query.index;
}

std::vector<std::uint8_t> SegMask::dense() const {
  const int n = 2 * n_units_;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * n, 0);
  auto ref = [this](int i) {
    return i < n_units_ ? UnitRef::received(i + 1)
                        : UnitRef::generated(i - n_units_ + 1);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(i) * n + j] = allows(ref(i), ref(j)) ? 1 : 0;
    }
  }
  return out;
}

SegMask build_seg_mask(const UnitStream& stream) {
  return SegMask(stream.size());
}

TokenLayout::TokenLayout(const UnitStream& stream,
                         std::span<const int> generated_lens) {
  if (static_cast<int>(generated_lens.size()) > stream.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "more generated lengths than received units");
  }
  for (const auto& unit : stream.received) {
    recv_begin_.push_back(static_cast<int>(origins_.size()));
    const auto n = static_cast<int>(unit.token_count());
    recv_len_.push_back(n);
    for (int i = 0; i < n; ++i) {
      origins_.push_back({UnitRef::received(unit.arrival_index), i});
    }
  }
  received_tokens_ = static_cast<int>(origins_.size());
  for (std::size_t k = 0; k < generated_lens.size(); ++k) {
    if (generated_lens[k] < 0) {
      throw Error(ErrorCode::kMissingGeneratedLengths,
                  "length of C_" + std::to_string(k + 1) + " is unknown");
    }
    gen_begin_.push_back(static_cast<int>(origins_.size()));
    gen_len_.push_back(generated_lens[k]);
    for (int i = 0; i < generated_lens[k]; ++i) {
      origins_.push_back({UnitRef::generated(static_cast<int>(k) + 1), i});
    }
  }
}

int TokenLayout::begin(UnitRef unit) const {
  const auto& v = unit.side == StreamSide::kReceived ? recv_begin_ : gen_begin_;
  return v.at(static_cast<std::size_t>(unit.index - 1));
}

int TokenLayout::length(UnitRef unit) const {
  const auto& v = unit.side == StreamSide::kReceived ? recv_len_ : gen_len_;
  return v.at(static_cast<std::size_t>(unit.index - 1));
}

bool token_allowed(const SegMask& mask,
                   const TokenLayout& layout,
                   WithinReceived within,
                   int query_token,
                   int key_token) {
  const auto& q = layout.origin(query_token);
  const auto& k = layout.origin(key_token);
  if (q.unit == k.unit) {
    if (q.unit.side == StreamSide::kReceived && within == WithinReceived::kFull) {
      return true;
    }
    return k.local <= q.local;
  }
  return mask.allows(q.unit, k.unit);
}

TokenMask::TokenMask(TokenLayout layout,
                     int row_begin,
                     int row_end,
                     std::vector<std::uint8_t> bits)
    : layout_(std::move(layout)),
      row_begin_(row_begin),
      row_end_(row_end),
      bits_(std::move(bits)) {}

namespace {

TokenMask materialize(const SegMask& mask,
                      TokenLayout layout,
                      WithinReceived within,
                      int row_begin,
                      int row_end) {
  const auto k_len = static_cast<std::size_t>(layout.size());
  std::vector<std::uint8_t> bits(
      static_cast<std::size_t>(row_end - row_begin) * k_len, 0);
  for (int q = row_begin; q < row_end; ++q) {
    auto* row = bits.data() + static_cast<std::size_t>(q - row_begin) * k_len;
    for (int k = 0; k < layout.size(); ++k) {
      row[k] = token_allowed(mask, layout, within, q, k) ? 1 : 0;
    }
  }
  return TokenMask(std::move(layout), row_begin, row_end, std::move(bits));
}

void check_units(const SegMask& mask, const UnitStream& stream) {
  if (mask.n_units() != stream.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "mask built for " + std::to_string(mask.n_units()) +
                    " units, stream has " + std::to_string(stream.size()));
  }
}

std::vector<int> generated_lengths(const UnitStream& stream) {
  std::vector<int> lens;
  for (const auto& g : stream.generated) {
    lens.push_back(static_cast<int>(g.tokens.size()));
  }
  return lens;
}

}  // namespace

TokenMask expand_token_mask(const SegMask& mask,
                            const UnitStream& stream,
                            WithinReceived within) {
  const auto lens = generated_lengths(stream);
  return expand_token_mask(mask, stream, within, lens);
}

TokenMask expand_token_mask(const SegMask& mask,
                            const UnitStream& stream,
                            WithinReceived within,
                            std::span<const int> generated_lens) {
  check_units(mask, stream);
  TokenLayout layout(stream, generated_lens);
  const int n = layout.size();
  return materialize(mask, std::move(layout), within, 0, n);
}

TokenMask expand_unit_rows(const SegMask& mask,
                           const UnitStream& stream,
                           WithinReceived within,
                           std::span<const int> generated_lens,
                           UnitRef query_unit) {
  check_units(mask, stream);
  TokenLayout layout(stream, generated_lens);
  const int begin = layout.begin(query_unit);
  const int end = begin + layout.length(query_unit);
  return materialize(mask, std::move(layout), within, begin, end);
}

std::string_view backend_class_name(BackendClass c) {
  switch (c) {
    case BackendClass::kDenseCausalPrefill: return "DenseCausalPrefill";
    case BackendClass::kSingleTokenDecode: return "SingleTokenDecode";
    case BackendClass::kMaskedChunk: return "MaskedChunk";
  }
  return "Unknown";
}

BackendClass classify_attention(std::int64_t q_len,
                                std::int64_t k_len,
                                bool mask_is_dense_causal) {
  if (q_len < 1 || q_len > k_len) {
    throw Error(ErrorCode::kUnsupportedShape,
                "attention shape q_len=" + std::to_string(q_len) +
                    " k_len=" + std::to_string(k_len));
  }
  if (q_len == 1) return BackendClass::kSingleTokenDecode;
  if (q_len == k_len && mask_is_dense_causal) {
    return BackendClass::kDenseCausalPrefill;
  }
  return BackendClass::kMaskedChunk;
}

}  // namespace streamthink

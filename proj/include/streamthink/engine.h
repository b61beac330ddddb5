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
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "streamthink/kv_cache.h"
#include "streamthink/seg_mask.h"
#include "streamthink/stream_model.h"
#include "streamthink/stream_rope.h"
#include "streamthink/tensor.h"

namespace streamthink {

struct EngineConfig {
  int n_layers = 2;
  int n_heads = 2;
  int head_dim = 8;
  int vocab_size = 64;
  int ffn_dim = 0;  // 0 means 4 * model_dim
  std::uint64_t seed = 0;
  // head_dim == 0 selects the default band split for `head_dim`.
  RopeConfig rope;

  int model_dim() const { return n_heads * head_dim; }
  int hidden_ffn_dim() const { return ffn_dim > 0 ? ffn_dim : 4 * model_dim(); }
  RopeConfig effective_rope() const;
  // Throws kInvalidConfig.
  void validate() const;
};

using HiddenStates = Matrix;

// Replacement input embeddings for received units, keyed by arrival index.
using EmbeddingOverrides = std::map<int, Matrix>;

struct Teacher {
  std::vector<TokenId> tokens;
};

// Autoregressive argmax decoding; the first input token is `start_token`
// and ties go to the lowest token id.
struct Greedy {
  TokenId start_token = 1;
};

using DecodeMode = std::variant<Teacher, Greedy>;

struct MonolithicResult {
  TokenLayout layout;
  HiddenStates hidden;  // final residual stream, one row per token
  Matrix logits;        // tokens x vocab_size
};

struct IngestResult {
  HiddenStates hidden;
  Matrix logits;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // the unit's input tokens
  HiddenStates hidden;
  Matrix logits;  // row i is computed at input token i
};

// Masked softmax over admissible entries; masked entries get weight 0.
// Throws kUnsupportedShape when every entry is masked.
std::vector<double> masked_softmax(std::span<const double> scores,
                                   std::span<const std::uint8_t> allowed);

// Lowest index among the maxima.
TokenId argmax_lowest(std::span<const double> logits);

// Small seeded pre-norm transformer decoder.  Weights are immutable after
// construction, so one engine may serve concurrent callers.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  const EngineConfig& config() const { return config_; }

  Matrix embed_received(const ReceivedUnit& unit) const;
  std::vector<double> embed_generated(TokenId token) const;
  Matrix logits(const HiddenStates& hidden) const;

  // One pass over <R_1..R_U, C_1..C_n> under the expanded token mask.
  // `generated_tokens` holds C_1..C_n, n <= U.
  MonolithicResult forward_monolithic(
      const UnitStream& stream,
      std::span<const std::vector<TokenId>> generated_tokens,
      WithinReceived within,
      const EmbeddingOverrides* overrides = nullptr) const;

  // Appends the next received unit (segment or question) to the source
  // cache.  Its tokens attend the cached source prefix and, per `within`,
  // the unit itself.
  IngestResult ingest_segment(DualKvCache& cache,
                              const ReceivedUnit& unit,
                              const OffsetTable& offsets,
                              WithinReceived within,
                              const Matrix* embedding_override = nullptr) const;

  // Decodes C_u against the source prefix R_{1:u} and C_{1:u-1}.
  DecodeResult decode_generated_unit(DualKvCache& cache,
                                     int unit_index,
                                     int length,
                                     const OffsetTable& offsets,
                                     const DecodeMode& mode) const;

  // Same, reading the source through an explicit snapshot, which must hold
  // exactly R_{1:u}.
  DecodeResult decode_generated_unit(DualKvCache& cache,
                                     const SourceSnapshot& source,
                                     int unit_index,
                                     int length,
                                     const OffsetTable& offsets,
                                     const DecodeMode& mode) const;

 private:
  struct Layer {
    std::vector<double> attn_gain;
    std::vector<double> wq, wk, wv, wo;  // model_dim x model_dim
    std::vector<double> ffn_gain;
    std::vector<double> w1, b1;  // model_dim x ffn, ffn
    std::vector<double> w2;      // ffn x model_dim
  };

  struct KeyBlock {
    const Matrix* keys;
    const Matrix* values;
  };

  void project_qkv(const Layer& layer,
                   std::span<const double> x,
                   const TokenPosition& pos,
                   std::span<double> q,
                   std::span<double> k,
                   std::span<double> v) const;
  void attend(std::span<const double> q,
              std::span<const KeyBlock> blocks,
              std::span<const std::uint8_t> allowed,
              std::span<double> out) const;
  void finish_layer(const Layer& layer,
                    std::span<const double> attn,
                    std::span<double> x) const;

  EngineConfig config_;
  RopeConfig rope_;
  std::vector<double> token_embedding_;  // vocab x model_dim
  std::vector<double> segment_type_, question_type_, generated_type_;
  std::vector<Layer> layers_;
  std::vector<double> final_gain_;
  std::vector<double> lm_head_;  // model_dim x vocab
};

Engine init_engine(const EngineConfig& config);

}  // namespace streamthink

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

#include "streamthink/engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "streamthink/error.h"
#include "util/splitmix.h"

namespace streamthink {

namespace {

constexpr double kNormEps = 1e-6;

std::vector<double> random_vector(std::uint64_t& state, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = util::symmetric_unit(state) * scale;
  return v;
}

std::vector<double> gain_vector(std::uint64_t& state, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = 1.0 + 0.1 * util::symmetric_unit(state);
  return v;
}

// out = x * W for row-major W of shape (x.size() x out.size()).
void matvec(std::span<const double> x,
            const std::vector<double>& w,
            std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t cols = out.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double* wr = w.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += xi * wr[j];
  }
}

void rms_norm(std::span<const double> x,
              const std::vector<double>& gain,
              std::span<double> out) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + kNormEps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
}

double gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

void check_finite(std::span<const double> row) {
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidConfig, "non-finite hidden state");
    }
  }
}

}  // namespace

std::vector<double> masked_softmax(std::span<const double> scores,
                                   std::span<const std::uint8_t> allowed) {
  if (scores.size() != allowed.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and mask differ in size");
  }
  double max_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (allowed[i]) {
      max_score = std::max(max_score, scores[i]);
      any = true;
    }
  }
  if (!any) {
    throw Error(ErrorCode::kUnsupportedShape, "fully masked attention row");
  }
  std::vector<double> w(scores.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (allowed[i]) {
      w[i] = std::exp(scores[i] - max_score);
      sum += w[i];
    }
  }
  for (auto& x : w) x /= sum;
  return w;
}

TokenId argmax_lowest(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

RopeConfig EngineConfig::effective_rope() const {
  if (rope.head_dim == 0) {
    return RopeConfig::with_default_bands(head_dim, rope.base_theta);
  }
  return rope;
}

void EngineConfig::validate() const {
  if (n_layers <= 0 || n_heads <= 0 || head_dim <= 0 || vocab_size <= 0 ||
      ffn_dim < 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "layers, heads, head_dim and vocab_size must be positive");
  }
  if (head_dim % 2 != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "head_dim must be even for rotary pairs");
  }
  const auto r = effective_rope();
  if (r.head_dim != head_dim) {
    throw Error(ErrorCode::kInvalidConfig, "rope head_dim differs from head_dim");
  }
  r.validate();
}

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
  config_.validate();
  rope_ = config_.effective_rope();
  const int d = config_.model_dim();
  const int f = config_.hidden_ffn_dim();
  const auto dd = static_cast<std::size_t>(d);
  const auto df = static_cast<std::size_t>(f);
  std::uint64_t state = config_.seed ^ 0x5EEDBA5EULL;

  token_embedding_ =
      random_vector(state, static_cast<std::size_t>(config_.vocab_size) * dd, 1.0);
  segment_type_ = random_vector(state, dd, 0.5);
  question_type_ = random_vector(state, dd, 0.5);
  generated_type_ = random_vector(state, dd, 0.5);
  const double s_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double s_f = 1.0 / std::sqrt(static_cast<double>(f));
  for (int l = 0; l < config_.n_layers; ++l) {
    Layer layer;
    layer.attn_gain = gain_vector(state, d);
    layer.wq = random_vector(state, dd * dd, s_d);
    layer.wk = random_vector(state, dd * dd, s_d);
    layer.wv = random_vector(state, dd * dd, s_d);
    layer.wo = random_vector(state, dd * dd, s_d);
    layer.ffn_gain = gain_vector(state, d);
    layer.w1 = random_vector(state, dd * df, s_d);
    layer.b1 = random_vector(state, df, 0.1);
    layer.w2 = random_vector(state, df * dd, s_f);
    layers_.push_back(std::move(layer));
  }
  final_gain_ = gain_vector(state, d);
  lm_head_ = random_vector(
      state, dd * static_cast<std::size_t>(config_.vocab_size), s_d);
}

Engine init_engine(const EngineConfig& config) { return Engine(config); }

Matrix Engine::embed_received(const ReceivedUnit& unit) const {
  const int d = config_.model_dim();
  const auto n = static_cast<int>(unit.token_count());
  Matrix out(n, d);
  for (int i = 0; i < n; ++i) {
    auto row = out.row(i);
    if (unit.is_segment()) {
      // Stand-in visual features: a pseudo-random vector per (segment, token).
      std::uint64_t state = config_.seed * 0x2545F4914F6CDD1DULL +
                            unit.feature_seed * 0x9E3779B97F4A7C15ULL +
                            static_cast<std::uint64_t>(i);
      for (int j = 0; j < d; ++j) {
        row[j] = util::symmetric_unit(state) + segment_type_[static_cast<std::size_t>(j)];
      }
    } else {
      const auto id = static_cast<std::size_t>(
          unit.text[static_cast<std::size_t>(i)] % config_.vocab_size);
      for (int j = 0; j < d; ++j) {
        row[j] = token_embedding_[id * static_cast<std::size_t>(d) + j] +
                 question_type_[static_cast<std::size_t>(j)];
      }
    }
  }
  return out;
}

std::vector<double> Engine::embed_generated(TokenId token) const {
  const int d = config_.model_dim();
  if (token < 0) {
    throw Error(ErrorCode::kInvalidUnit, "negative token id");
  }
  const auto id = static_cast<std::size_t>(token % config_.vocab_size);
  std::vector<double> out(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    out[static_cast<std::size_t>(j)] =
        token_embedding_[id * static_cast<std::size_t>(d) + j] +
        generated_type_[static_cast<std::size_t>(j)];
  }
  return out;
}

Matrix Engine::logits(const HiddenStates& hidden) const {
  const int d = config_.model_dim();
  Matrix out(hidden.rows, config_.vocab_size);
  std::vector<double> normed(static_cast<std::size_t>(d));
  for (int r = 0; r < hidden.rows; ++r) {
    rms_norm(hidden.row(r), final_gain_, normed);
    matvec(normed, lm_head_, out.row(r));
  }
  return out;
}

void Engine::project_qkv(const Layer& layer,
                         std::span<const double> x,
                         const TokenPosition& pos,
                         std::span<double> q,
                         std::span<double> k,
                         std::span<double> v) const {
  std::vector<double> normed(x.size());
  rms_norm(x, layer.attn_gain, normed);
  matvec(normed, layer.wq, q);
  matvec(normed, layer.wk, k);
  matvec(normed, layer.wv, v);
  const auto hd = static_cast<std::size_t>(config_.head_dim);
  for (int h = 0; h < config_.n_heads; ++h) {
    const auto off = static_cast<std::size_t>(h) * hd;
    rotate_in_place(q.subspan(off, hd), pos, rope_);
    rotate_in_place(k.subspan(off, hd), pos, rope_);
  }
}

void Engine::attend(std::span<const double> q,
                    std::span<const KeyBlock> blocks,
                    std::span<const std::uint8_t> allowed,
                    std::span<double> out) const {
  const auto hd = static_cast<std::size_t>(config_.head_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> scores;
  for (int h = 0; h < config_.n_heads; ++h) {
    const auto off = static_cast<std::size_t>(h) * hd;
    scores.clear();
    std::size_t key = 0;
    for (const auto& b : blocks) {
      for (int r = 0; r < b.keys->rows; ++r, ++key) {
        if (!allowed[key]) continue;
        const auto krow = b.keys->row(r);
        double s = 0.0;
        for (std::size_t i = 0; i < hd; ++i) s += q[off + i] * krow[off + i];
        scores.push_back(s * scale);
      }
    }
    if (scores.empty()) {
      throw Error(ErrorCode::kUnsupportedShape, "fully masked attention row");
    }
    const double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (auto& s : scores) {
      s = std::exp(s - m);
      sum += s;
    }
    key = 0;
    std::size_t idx = 0;
    for (const auto& b : blocks) {
      for (int r = 0; r < b.values->rows; ++r, ++key) {
        if (!allowed[key]) continue;
        const double w = scores[idx++] / sum;
        const auto vrow = b.values->row(r);
        for (std::size_t i = 0; i < hd; ++i) out[off + i] += w * vrow[off + i];
      }
    }
  }
}

void Engine::finish_layer(const Layer& layer,
                          std::span<const double> attn,
                          std::span<double> x) const {
  const std::size_t d = x.size();
  std::vector<double> proj(d);
  matvec(attn, layer.wo, proj);
  for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];

  std::vector<double> normed(d);
  rms_norm(x, layer.ffn_gain, normed);
  std::vector<double> hidden(layer.b1.size());
  matvec(normed, layer.w1, hidden);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden[i] = gelu(hidden[i] + layer.b1[i]);
  }
  matvec(hidden, layer.w2, proj);
  for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];
}

MonolithicResult Engine::forward_monolithic(
    const UnitStream& stream,
    std::span<const std::vector<TokenId>> generated_tokens,
    WithinReceived within,
    const EmbeddingOverrides* overrides) const {
  std::vector<int> lens;
  for (const auto& g : generated_tokens) lens.push_back(static_cast<int>(g.size()));
  const auto seg = build_seg_mask(stream);
  auto mask = expand_token_mask(seg, stream, within, lens);
  const auto offsets = compute_offsets(stream, lens);
  const auto positions = assign_positions(stream, offsets);

  const int d = config_.model_dim();
  const int n = mask.k_len();
  Matrix x(n, d);
  int row = 0;
  for (const auto& unit : stream.received) {
    const Matrix* emb = nullptr;
    Matrix own;
    if (overrides) {
      if (auto it = overrides->find(unit.arrival_index); it != overrides->end()) {
        emb = &it->second;
      }
    }
    if (!emb) {
      own = embed_received(unit);
      emb = &own;
    }
    if (emb->rows != unit.token_count() || emb->cols != d) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding override shape");
    }
    for (int i = 0; i < emb->rows; ++i, ++row) {
      std::copy(emb->row(i).begin(), emb->row(i).end(), x.row(row).begin());
    }
  }
  for (const auto& unit_tokens : generated_tokens) {
    for (TokenId t : unit_tokens) {
      const auto e = embed_generated(t);
      std::copy(e.begin(), e.end(), x.row(row++).begin());
    }
  }
  auto position_of = [&](int token) -> const TokenPosition& {
    return token < mask.layout().received_tokens()
               ? positions.received[static_cast<std::size_t>(token)]
               : positions.generated[static_cast<std::size_t>(
                     token - mask.layout().received_tokens())];
  };

  Matrix q(n, d), k(n, d), v(n, d);
  std::vector<double> attn(static_cast<std::size_t>(d));
  for (const auto& layer : layers_) {
    for (int i = 0; i < n; ++i) {
      project_qkv(layer, x.row(i), position_of(i), q.row(i), k.row(i), v.row(i));
    }
    const KeyBlock block{&k, &v};
    for (int i = 0; i < n; ++i) {
      attend(q.row(i), std::span(&block, 1), mask.row(i), attn);
      finish_layer(layer, attn, x.row(i));
    }
  }
  for (int i = 0; i < n; ++i) check_finite(x.row(i));
  auto out_logits = logits(x);
  return {mask.layout(), std::move(x), std::move(out_logits)};
}

IngestResult Engine::ingest_segment(DualKvCache& cache,
                                    const ReceivedUnit& unit,
                                    const OffsetTable& offsets,
                                    WithinReceived within,
                                    const Matrix* embedding_override) const {
  const int d = config_.model_dim();
  if (cache.n_layers() != config_.n_layers || cache.model_dim() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "cache built for another engine");
  }
  const int u = unit.arrival_index;
  const int have = cache.source_units();
  if (u != have + 1) {
    throw Error(ErrorCode::kOutOfOrderIngest,
                "next unit to ingest is R_" + std::to_string(have + 1) +
                    ", got R_" + std::to_string(u));
  }
  const auto prefix = cache.snapshot(have);
  Matrix x = embedding_override ? *embedding_override : embed_received(unit);
  if (x.rows != unit.token_count() || x.cols != d) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding override shape");
  }
  const int n = x.rows;

  auto block = std::make_shared<UnitKv>();
  block->unit = UnitRef::received(u);
  block->positions = received_positions(unit, offsets.received_offset(u));

  const auto prefix_len = static_cast<std::size_t>(prefix.token_count());
  std::vector<std::uint8_t> allowed(prefix_len + static_cast<std::size_t>(n), 1);
  Matrix q(n, d);
  std::vector<double> attn(static_cast<std::size_t>(d));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix keys(n, d), values(n, d);
    for (int i = 0; i < n; ++i) {
      project_qkv(layer, x.row(i), block->positions[static_cast<std::size_t>(i)],
                  q.row(i), keys.row(i), values.row(i));
    }
    block->keys.push_back(std::move(keys));
    block->values.push_back(std::move(values));

    std::vector<KeyBlock> blocks;
    for (int b = 0; b < prefix.unit_count(); ++b) {
      blocks.push_back({&prefix.unit(b).keys[l], &prefix.unit(b).values[l]});
    }
    blocks.push_back({&block->keys[l], &block->values[l]});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        allowed[prefix_len + static_cast<std::size_t>(j)] =
            (within == WithinReceived::kFull || j <= i) ? 1 : 0;
      }
      attend(q.row(i), blocks, allowed, attn);
      finish_layer(layer, attn, x.row(i));
    }
  }
  for (int i = 0; i < n; ++i) check_finite(x.row(i));
  cache.append_source(std::move(block));
  auto out_logits = logits(x);
  return {std::move(x), std::move(out_logits)};
}

DecodeResult Engine::decode_generated_unit(DualKvCache& cache,
                                           int unit_index,
                                           int length,
                                           const OffsetTable& offsets,
                                           const DecodeMode& mode) const {
  return decode_generated_unit(cache, cache.snapshot(unit_index), unit_index,
                               length, offsets, mode);
}

DecodeResult Engine::decode_generated_unit(DualKvCache& cache,
                                           const SourceSnapshot& source,
                                           int unit_index,
                                           int length,
                                           const OffsetTable& offsets,
                                           const DecodeMode& mode) const {
  const int d = config_.model_dim();
  const int u = unit_index;
  if (cache.n_layers() != config_.n_layers || cache.model_dim() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "cache built for another engine");
  }
  if (source.unit_count() < u) {
    throw Error(ErrorCode::kSnapshotTooShort,
                "decoding C_" + std::to_string(u) + " needs R_{1:" +
                    std::to_string(u) + "}, snapshot holds " +
                    std::to_string(source.unit_count()) + " units");
  }
  if (source.unit_count() > u) {
    throw Error(ErrorCode::kSnapshotTooLong,
                "snapshot exposes R_" + std::to_string(u + 1) +
                    " while decoding C_" + std::to_string(u));
  }
  if (cache.decode_units() != u - 1) {
    throw Error(ErrorCode::kOutOfOrderDecode,
                "decode cache holds " + std::to_string(cache.decode_units()) +
                    " units, C_" + std::to_string(u) + " requested");
  }
  if (length < 0) {
    throw Error(ErrorCode::kInvalidLengths, "negative generated length");
  }
  const auto* teacher = std::get_if<Teacher>(&mode);
  if (teacher && static_cast<int>(teacher->tokens.size()) != length) {
    throw Error(ErrorCode::kLengthMismatch,
                "teacher tokens do not match the requested length");
  }
  const std::int64_t base = cache.decode_len();
  if (static_cast<int>(offsets.gen_offsets.size()) >= u &&
      offsets.generated_offset(u) != base) {
    throw Error(ErrorCode::kLengthMismatch,
                "offset table disagrees with decoded lengths for C_" +
                    std::to_string(u));
  }

  auto block = std::make_shared<UnitKv>();
  block->unit = UnitRef::generated(u);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    block->keys.emplace_back(0, d);
    block->values.emplace_back(0, d);
  }
  const auto& previous = cache.decode_blocks();

  DecodeResult result;
  result.hidden = Matrix(0, d);
  result.logits = Matrix(0, config_.vocab_size);
  std::vector<double> q(static_cast<std::size_t>(d)), k(q.size()), v(q.size());
  std::vector<double> attn(q.size());
  std::vector<std::uint8_t> allowed;
  for (int i = 0; i < length; ++i) {
    TokenId token;
    if (teacher) {
      token = teacher->tokens[static_cast<std::size_t>(i)];
    } else if (i == 0) {
      token = std::get<Greedy>(mode).start_token;
    } else {
      token = argmax_lowest(result.logits.row(i - 1));
    }
    result.tokens.push_back(token);
    auto x = embed_generated(token);
    const auto pos = TokenPosition::text(base + i);
    block->positions.push_back(pos);

    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      project_qkv(layer, x, pos, q, k, v);
      block->keys[l].append_row(k);
      block->values[l].append_row(v);

      std::vector<KeyBlock> blocks;
      std::size_t total = 0;
      for (int b = 0; b < source.unit_count(); ++b) {
        blocks.push_back({&source.unit(b).keys[l], &source.unit(b).values[l]});
        total += static_cast<std::size_t>(source.unit(b).token_count());
      }
      for (const auto& prev : previous) {
        blocks.push_back({&prev->keys[l], &prev->values[l]});
        total += static_cast<std::size_t>(prev->token_count());
      }
      blocks.push_back({&block->keys[l], &block->values[l]});
      total += static_cast<std::size_t>(i + 1);
      allowed.assign(total, 1);
      attend(q, blocks, allowed, attn);
      finish_layer(layer, attn, x);
    }
    check_finite(x);
    result.hidden.append_row(x);
    Matrix one(0, d);
    one.append_row(x);
    result.logits.append_row(logits(one).row(0));
  }
  cache.append_decode(std::move(block));
  return result;
}

}  // namespace streamthink

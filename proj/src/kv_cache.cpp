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

#include "streamthink/kv_cache.h"

#include <cstring>

#include "streamthink/error.h"

namespace streamthink {

namespace {

void check_block(const UnitKv& block, int n_layers, int model_dim) {
  const bool shape_ok =
      static_cast<int>(block.keys.size()) == n_layers &&
      static_cast<int>(block.values.size()) == n_layers;
  if (!shape_ok) {
    throw Error(ErrorCode::kDimensionMismatch, "cache block layer count");
  }
  for (int l = 0; l < n_layers; ++l) {
    const auto& k = block.keys[static_cast<std::size_t>(l)];
    const auto& v = block.values[static_cast<std::size_t>(l)];
    if (k.rows != block.token_count() || v.rows != block.token_count() ||
        k.cols != model_dim || v.cols != model_dim) {
      throw Error(ErrorCode::kDimensionMismatch, "cache block shape");
    }
  }
}

template <typename T>
void put(std::string& out, const T& value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

std::string serialize_blocks(
    const std::vector<std::shared_ptr<const UnitKv>>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    for (int i = 0; i < b->token_count(); ++i) {
      const auto& p = b->positions[static_cast<std::size_t>(i)];
      put(out, static_cast<std::int32_t>(b->unit.index));
      put(out, p.t);
      put(out, p.h);
      put(out, p.w);
      for (std::size_t l = 0; l < b->keys.size(); ++l) {
        for (double x : b->keys[l].row(i)) put(out, x);
        for (double x : b->values[l].row(i)) put(out, x);
      }
    }
  }
  return out;
}

}  // namespace

SourceSnapshot::SourceSnapshot(std::vector<std::shared_ptr<const UnitKv>> units)
    : units_(std::move(units)) {
  for (const auto& u : units_) tokens_ += u->token_count();
}

DualKvCache::DualKvCache(int n_layers, int model_dim)
    : n_layers_(n_layers), model_dim_(model_dim) {}

int DualKvCache::source_units() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(source_.size());
}

std::int64_t DualKvCache::source_len() const {
  std::lock_guard lock(mu_);
  return source_len_;
}

void DualKvCache::append_source(std::shared_ptr<const UnitKv> block) {
  check_block(*block, n_layers_, model_dim_);
  {
    std::lock_guard lock(mu_);
    const int expected = static_cast<int>(source_.size()) + 1;
    if (block->unit != UnitRef::received(expected)) {
      throw Error(ErrorCode::kOutOfOrderIngest,
                  "expected R_" + std::to_string(expected) + ", got unit " +
                      std::to_string(block->unit.index));
    }
    source_len_ += block->token_count();
    source_.push_back(std::move(block));
  }
  source_grew_.notify_all();
}

SourceSnapshot DualKvCache::snapshot(int u) const {
  std::lock_guard lock(mu_);
  if (u < 0 || u > static_cast<int>(source_.size())) {
    throw Error(ErrorCode::kSnapshotTooShort,
                "source cache holds " + std::to_string(source_.size()) +
                    " units, R_{1:" + std::to_string(u) + "} requested");
  }
  return SourceSnapshot({source_.begin(), source_.begin() + u});
}

SourceSnapshot DualKvCache::wait_snapshot(int u) const {
  std::unique_lock lock(mu_);
  source_grew_.wait(lock, [&] {
    return source_closed_ || static_cast<int>(source_.size()) >= u;
  });
  if (static_cast<int>(source_.size()) < u) {
    throw Error(ErrorCode::kSnapshotTooShort,
                "source closed after " + std::to_string(source_.size()) +
                    " units, R_{1:" + std::to_string(u) + "} requested");
  }
  return SourceSnapshot({source_.begin(), source_.begin() + u});
}

void DualKvCache::close_source() {
  {
    std::lock_guard lock(mu_);
    source_closed_ = true;
  }
  source_grew_.notify_all();
}

int DualKvCache::decode_units() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(decode_.size());
}

std::int64_t DualKvCache::decode_len() const {
  std::lock_guard lock(mu_);
  return decode_len_;
}

void DualKvCache::append_decode(std::shared_ptr<const UnitKv> block) {
  check_block(*block, n_layers_, model_dim_);
  std::lock_guard lock(mu_);
  const int expected = static_cast<int>(decode_.size()) + 1;
  if (block->unit != UnitRef::generated(expected)) {
    throw Error(ErrorCode::kOutOfOrderDecode,
                "expected C_" + std::to_string(expected) + ", got unit " +
                    std::to_string(block->unit.index));
  }
  decode_len_ += block->token_count();
  decode_.push_back(std::move(block));
}

std::string DualKvCache::serialize_source() const {
  std::lock_guard lock(mu_);
  return serialize_blocks(source_);
}

std::string DualKvCache::serialize_decode() const {
  std::lock_guard lock(mu_);
  return serialize_blocks(decode_);
}

}  // namespace streamthink

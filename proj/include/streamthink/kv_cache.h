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

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "streamthink/seg_mask.h"
#include "streamthink/stream_rope.h"
#include "streamthink/tensor.h"

namespace streamthink {

// Keys and values of one unit's tokens for every layer.  Keys are stored
// after rotary encoding.
struct UnitKv {
  UnitRef unit;
  std::vector<TokenPosition> positions;
  std::vector<Matrix> keys;    // per layer, tokens x model_dim
  std::vector<Matrix> values;  // per layer, tokens x model_dim

  int token_count() const { return static_cast<int>(positions.size()); }
};

// Immutable view of the source cache restricted to R_{1:u}.
class SourceSnapshot {
 public:
  SourceSnapshot() = default;
  explicit SourceSnapshot(std::vector<std::shared_ptr<const UnitKv>> units);

  int unit_count() const { return static_cast<int>(units_.size()); }
  std::int64_t token_count() const { return tokens_; }
  const UnitKv& unit(int i) const { return *units_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<std::shared_ptr<const UnitKv>> units_;
  std::int64_t tokens_ = 0;
};

// Two append-only key/value stores: the source cache is written only by
// ingestion, the decode cache only by decoding.  One writer per side may run
// concurrently with the other; decoding reads the source side through
// snapshots.
class DualKvCache {
 public:
  DualKvCache(int n_layers, int model_dim);

  int n_layers() const { return n_layers_; }
  int model_dim() const { return model_dim_; }

  int source_units() const;
  std::int64_t source_len() const;
  // Throws kOutOfOrderIngest unless `block` holds R_{source_units()+1}.
  void append_source(std::shared_ptr<const UnitKv> block);
  // Source prefix R_{1:u}; throws kSnapshotTooShort if fewer units exist.
  SourceSnapshot snapshot(int u) const;
  // Blocks until R_{1:u} has been ingested; throws kSnapshotTooShort if the
  // source side is closed first.
  SourceSnapshot wait_snapshot(int u) const;
  // Marks the source side finished and wakes waiting readers.
  void close_source();

  int decode_units() const;
  std::int64_t decode_len() const;
  // Completed generated units C_{1:n}; read by the decoding writer only.
  const std::vector<std::shared_ptr<const UnitKv>>& decode_blocks() const {
    return decode_;
  }
  // Throws kOutOfOrderDecode unless `block` holds C_{decode_units()+1}.
  void append_decode(std::shared_ptr<const UnitKv> block);

  // Token-major byte images: a later append only extends them.
  std::string serialize_source() const;
  std::string serialize_decode() const;

 private:
  int n_layers_;
  int model_dim_;
  mutable std::mutex mu_;
  mutable std::condition_variable source_grew_;
  std::vector<std::shared_ptr<const UnitKv>> source_;
  std::vector<std::shared_ptr<const UnitKv>> decode_;
  std::int64_t source_len_ = 0;
  bool source_closed_ = false;
  std::int64_t decode_len_ = 0;
};

}  // namespace streamthink

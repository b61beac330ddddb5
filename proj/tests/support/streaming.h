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

#include <span>
#include <vector>

#include "streamthink/engine.h"

namespace streamthink::testing {

enum class StreamingOrder {
  kInterleaved,  // ingest R_u, decode C_u, repeat
  kIngestFirst,  // ingest every received unit, then decode C_1..C_n
};

// Teacher-forced run through the dual cache.  Rows follow the monolithic
// layout: every received token, then C_1..C_n.
Matrix streaming_logits(const Engine& engine, const UnitStream& stream,
                        std::span<const std::vector<TokenId>> generated_tokens,
                        WithinReceived within, StreamingOrder order,
                        const EmbeddingOverrides* overrides = nullptr);

// Largest per-row error, each scaled by the row's largest reference magnitude.
double max_row_relative_error(const Matrix& got, const Matrix& want);

}  // namespace streamthink::testing

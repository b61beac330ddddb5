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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "streamthink/engine.h"
#include "streamthink/stream_model.h"

namespace streamthink {

struct MemoryNote {
  int segment_index = 0;
  std::vector<TokenId> tokens;
  bool operator==(const MemoryNote&) const = default;
};

// Append-only segment memory; after t segments it holds notes 1..t.
class MemoryBank {
 public:
  int size() const { return static_cast<int>(notes_.size()); }
  const std::vector<MemoryNote>& notes() const { return notes_; }
  const MemoryNote& note(int segment_index) const {
    return notes_.at(static_cast<std::size_t>(segment_index - 1));
  }
  // Throws kDuplicateNote for an index already written and kIndexGap for
  // anything other than size() + 1.
  void write(int segment_index, std::vector<TokenId> note);

  bool operator==(const MemoryBank&) const = default;

 private:
  std::vector<MemoryNote> notes_;
};

MemoryBank memory_write(MemoryBank bank, int segment_index,
                        std::vector<TokenId> note);

enum class PipelineMode { kInterleaved, kDecoupled, kBatch };

std::string_view pipeline_mode_name(PipelineMode mode);

enum class EventKind {
  kArrival,  // received unit becomes available
  kIngestStart,
  kIngestEnd,
  kDecodeStart,
  kDecodeToken,
  kDecodeEnd,
  kFirstAnswerToken,
};

std::string_view event_kind_name(EventKind kind);

// `clock` counts processed tokens.  Ingestion and decoding each take one
// tick per token; ticks where both tracks have work are shared.
struct ScheduleEvent {
  EventKind kind = EventKind::kArrival;
  int unit_index = 0;
  std::int64_t clock = 0;
  bool operator==(const ScheduleEvent&) const = default;
};

struct PipelineOptions {
  WithinReceived within = WithinReceived::kCausal;
  // Arrival clock per received unit; empty means every unit is available
  // at clock 0.
  std::vector<std::int64_t> arrival_clocks;
  // Rationale tokens preceding the answer span, per question turn.
  std::vector<int> rationale_lens;
  // Teacher-forced generated tokens, one list per received unit; lengths
  // must agree with note_len / answer_lens.
  std::optional<std::vector<std::vector<TokenId>>> teacher_tokens;
  // Runs ingestion and decoding on two threads sharing the dual cache.
  bool concurrent = false;
};

struct TurnAnswer {
  int turn = 0;
  int unit_index = 0;
  std::vector<TokenId> tokens;
  std::size_t answer_begin = 0;
  Matrix logits;
};

struct PipelineResult {
  MemoryBank bank;
  std::vector<TurnAnswer> answers;
  std::vector<ScheduleEvent> events;
  UnitStream stream;  // input stream with generated units filled in
  std::vector<Matrix> generated_logits;  // per generated unit
};

// Arrival clocks for a stream recorded in real time: a segment becomes
// available once all of its tokens have streamed in, a question together
// with its latest segment.
std::vector<std::int64_t> realtime_arrivals(const UnitStream& stream,
                                            std::int64_t ticks_per_token = 1);

// Pure timing of a run; no engine work.
std::vector<ScheduleEvent> plan_schedule(const UnitStream& stream,
                                         PipelineMode mode,
                                         std::span<const int> generated_lens,
                                         std::span<const std::int64_t> arrival_clocks,
                                         std::span<const int> rationale_lens = {});

PipelineResult run_pipeline(const Engine& engine,
                            const UnitStream& stream,
                            PipelineMode mode,
                            int note_len,
                            std::span<const int> answer_lens,
                            const PipelineOptions& options = {});

// Tokens processed between the arrival of question turn r (1-based) and its
// first answer token.
std::int64_t ttft(std::span<const ScheduleEvent> events, int turn);

// Per-turn TTFT for every FirstAnswerToken in the log.
std::vector<std::int64_t> ttft_all(std::span<const ScheduleEvent> events);

}  // namespace streamthink

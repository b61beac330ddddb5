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

#include "streamthink/pipeline.h"

#include <algorithm>
#include <array>
#include <exception>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "streamthink/error.h"

namespace streamthink {

namespace {

constexpr TokenId kNoteStartToken = 1;
constexpr TokenId kAnswerStartToken = 2;

struct UnitTiming {
  std::int64_t arrival = 0;
  std::int64_t ingest_start = 0;
  std::int64_t ingest_end = 0;
  std::int64_t decode_start = 0;
  std::int64_t decode_end = 0;
};

std::vector<UnitTiming> unit_timings(const UnitStream& stream,
                                     PipelineMode mode,
                                     std::span<const int> lens,
                                     std::span<const std::int64_t> arrivals) {
  const int n = stream.size();
  std::vector<UnitTiming> t(static_cast<std::size_t>(n));
  std::int64_t prev_ingest_end = 0;
  std::int64_t prev_decode_end = 0;
  for (int i = 0; i < n; ++i) {
    auto& x = t[static_cast<std::size_t>(i)];
    x.arrival = arrivals.empty() ? 0 : arrivals[static_cast<std::size_t>(i)];
    const auto ingest = stream.received[static_cast<std::size_t>(i)].token_count();
    // Interleaved ingestion waits for the previous decode to finish.
    const std::int64_t ready =
        mode == PipelineMode::kInterleaved ? prev_decode_end : prev_ingest_end;
    x.ingest_start = std::max(x.arrival, ready);
    x.ingest_end = x.ingest_start + ingest;
    prev_ingest_end = x.ingest_end;
    if (mode != PipelineMode::kBatch) {
      x.decode_start = std::max(x.ingest_end, prev_decode_end);
      x.decode_end = x.decode_start + lens[static_cast<std::size_t>(i)];
      prev_decode_end = x.decode_end;
    }
  }
  if (mode == PipelineMode::kBatch) {
    prev_decode_end = prev_ingest_end;
    for (int i = 0; i < n; ++i) {
      auto& x = t[static_cast<std::size_t>(i)];
      x.decode_start = prev_decode_end;
      x.decode_end = x.decode_start + lens[static_cast<std::size_t>(i)];
      prev_decode_end = x.decode_end;
    }
  }
  return t;
}

void push_ingest(std::vector<ScheduleEvent>& out, int u, const UnitTiming& t) {
  out.push_back({EventKind::kIngestStart, u, t.ingest_start});
  out.push_back({EventKind::kIngestEnd, u, t.ingest_end});
}

void push_decode(std::vector<ScheduleEvent>& out,
                 int u,
                 const UnitTiming& t,
                 int len,
                 std::optional<int> first_answer) {
  out.push_back({EventKind::kDecodeStart, u, t.decode_start});
  for (int i = 0; i < len; ++i) {
    if (first_answer && *first_answer == i) {
      out.push_back({EventKind::kFirstAnswerToken, u, t.decode_start + i});
    }
    out.push_back({EventKind::kDecodeToken, u, t.decode_start + i + 1});
  }
  out.push_back({EventKind::kDecodeEnd, u, t.decode_end});
}

// Merges clock-ordered tracks; on equal clocks earlier tracks go first.
std::vector<ScheduleEvent> merge_tracks(
    std::span<const std::vector<ScheduleEvent>> tracks) {
  std::vector<ScheduleEvent> out;
  std::vector<std::size_t> head(tracks.size(), 0);
  for (;;) {
    int best = -1;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (head[i] == tracks[i].size()) continue;
      if (best < 0 || tracks[i][head[i]].clock <
                          tracks[static_cast<std::size_t>(best)]
                                [head[static_cast<std::size_t>(best)]]
                                    .clock) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    const auto b = static_cast<std::size_t>(best);
    out.push_back(tracks[b][head[b]++]);
  }
  return out;
}

void validate_lengths(const UnitStream& stream,
                      std::span<const int> lens,
                      std::span<const std::int64_t> arrivals,
                      std::span<const int> rationale_lens) {
  if (static_cast<int>(lens.size()) != stream.size()) {
    throw Error(ErrorCode::kInvalidLengths,
                "need one generated length per received unit");
  }
  for (int u = 1; u <= stream.size(); ++u) {
    const int len = lens[static_cast<std::size_t>(u - 1)];
    if (len < 0) {
      throw Error(ErrorCode::kInvalidLengths, "negative generated length");
    }
    if (!stream.unit(u).is_segment() && len < 1) {
      throw Error(ErrorCode::kInvalidLengths,
                  "answer of unit " + std::to_string(u) + " needs >= 1 token");
    }
  }
  if (!arrivals.empty()) {
    if (static_cast<int>(arrivals.size()) != stream.size()) {
      throw Error(ErrorCode::kInvalidLengths,
                  "need one arrival clock per received unit");
    }
    std::int64_t prev = 0;
    for (auto a : arrivals) {
      if (a < prev) {
        throw Error(ErrorCode::kInvalidLengths,
                    "arrival clocks must be non-negative and nondecreasing");
      }
      prev = a;
    }
  }
  if (!rationale_lens.empty()) {
    if (static_cast<int>(rationale_lens.size()) != stream.question_count()) {
      throw Error(ErrorCode::kInvalidLengths,
                  "need one rationale length per question turn");
    }
    for (int r = 0; r < stream.question_count(); ++r) {
      const int u = stream.turns[static_cast<std::size_t>(r)].arrival_index;
      const int rat = rationale_lens[static_cast<std::size_t>(r)];
      if (rat < 0 || rat >= lens[static_cast<std::size_t>(u - 1)]) {
        throw Error(ErrorCode::kInvalidLengths,
                    "rationale must leave at least one answer token");
      }
    }
  }
}

std::vector<int> rationale_by_unit(const UnitStream& stream,
                                   std::span<const int> rationale_lens) {
  std::vector<int> out(static_cast<std::size_t>(stream.size()), 0);
  for (int r = 0; r < static_cast<int>(rationale_lens.size()); ++r) {
    out[static_cast<std::size_t>(
        stream.turns[static_cast<std::size_t>(r)].arrival_index - 1)] =
        rationale_lens[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace

void MemoryBank::write(int segment_index, std::vector<TokenId> note) {
  if (segment_index >= 1 && segment_index <= size()) {
    throw Error(ErrorCode::kDuplicateNote,
                "note " + std::to_string(segment_index) + " already written");
  }
  if (segment_index != size() + 1) {
    throw Error(ErrorCode::kIndexGap,
                "next note is " + std::to_string(size() + 1) + ", got " +
                    std::to_string(segment_index));
  }
  notes_.push_back({segment_index, std::move(note)});
}

MemoryBank memory_write(MemoryBank bank, int segment_index,
                        std::vector<TokenId> note) {
  bank.write(segment_index, std::move(note));
  return bank;
}

std::string_view pipeline_mode_name(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::kInterleaved: return "interleaved";
    case PipelineMode::kDecoupled: return "decoupled";
    case PipelineMode::kBatch: return "batch";
  }
  return "unknown";
}

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kArrival: return "Arrival";
    case EventKind::kIngestStart: return "IngestStart";
    case EventKind::kIngestEnd: return "IngestEnd";
    case EventKind::kDecodeStart: return "DecodeStart";
    case EventKind::kDecodeToken: return "DecodeToken";
    case EventKind::kDecodeEnd: return "DecodeEnd";
    case EventKind::kFirstAnswerToken: return "FirstAnswerToken";
  }
  return "Unknown";
}

std::vector<std::int64_t> realtime_arrivals(const UnitStream& stream,
                                            std::int64_t ticks_per_token) {
  if (ticks_per_token < 0) {
    throw Error(ErrorCode::kInvalidLengths, "ticks_per_token must be >= 0");
  }
  std::vector<std::int64_t> out;
  std::int64_t recorded = 0;
  for (const auto& unit : stream.received) {
    if (unit.is_segment()) recorded += unit.token_count() * ticks_per_token;
    out.push_back(recorded);
  }
  return out;
}

std::vector<ScheduleEvent> plan_schedule(const UnitStream& stream,
                                         PipelineMode mode,
                                         std::span<const int> generated_lens,
                                         std::span<const std::int64_t> arrival_clocks,
                                         std::span<const int> rationale_lens) {
  validate_lengths(stream, generated_lens, arrival_clocks, rationale_lens);
  const auto timing = unit_timings(stream, mode, generated_lens, arrival_clocks);
  const auto rationale = rationale_by_unit(stream, rationale_lens);

  std::vector<ScheduleEvent> arrivals, ingest, decode;
  std::vector<std::pair<int, std::optional<int>>> pending;
  for (int u = 1; u <= stream.size(); ++u) {
    const auto& t = timing[static_cast<std::size_t>(u - 1)];
    arrivals.push_back({EventKind::kArrival, u, t.arrival});
    std::optional<int> first_answer;
    if (!stream.unit(u).is_segment()) {
      first_answer = rationale[static_cast<std::size_t>(u - 1)];
    }
    push_ingest(ingest, u, t);
    // Interleaved work is strictly sequential, so it shares one track.
    auto& work = mode == PipelineMode::kInterleaved ? ingest : decode;
    if (mode == PipelineMode::kInterleaved) {
      push_decode(work, u, t, generated_lens[static_cast<std::size_t>(u - 1)],
                  first_answer);
    } else {
      pending.push_back({u, first_answer});
    }
  }
  for (const auto& [u, first_answer] : pending) {
    push_decode(decode, u, timing[static_cast<std::size_t>(u - 1)],
                generated_lens[static_cast<std::size_t>(u - 1)], first_answer);
  }
  const std::array<std::vector<ScheduleEvent>, 3> tracks{
      std::move(arrivals), std::move(ingest), std::move(decode)};
  return merge_tracks(tracks);
}

PipelineResult run_pipeline(const Engine& engine,
                            const UnitStream& stream,
                            PipelineMode mode,
                            int note_len,
                            std::span<const int> answer_lens,
                            const PipelineOptions& options) {
  if (note_len < 0) {
    throw Error(ErrorCode::kInvalidLengths, "note_len must be >= 0");
  }
  if (static_cast<int>(answer_lens.size()) != stream.question_count()) {
    throw Error(ErrorCode::kInvalidLengths,
                "need one answer length per question turn");
  }
  if (!stream.generated.empty()) {
    throw Error(ErrorCode::kInvalidLengths,
                "pipeline input must not carry generated units");
  }
  std::vector<int> lens;
  {
    int r = 0;
    for (const auto& unit : stream.received) {
      lens.push_back(unit.is_segment() ? note_len
                                       : answer_lens[static_cast<std::size_t>(r++)]);
    }
  }
  if (options.teacher_tokens) {
    const auto& tt = *options.teacher_tokens;
    if (static_cast<int>(tt.size()) != stream.size()) {
      throw Error(ErrorCode::kInvalidLengths,
                  "teacher tokens need one list per received unit");
    }
    for (std::size_t i = 0; i < tt.size(); ++i) {
      if (static_cast<int>(tt[i].size()) != lens[i]) {
        throw Error(ErrorCode::kInvalidLengths,
                    "teacher tokens for unit " + std::to_string(i + 1) +
                        " disagree with the requested length");
      }
    }
  }

  PipelineResult result;
  result.events = plan_schedule(stream, mode, lens, options.arrival_clocks,
                                options.rationale_lens);
  const auto offsets = compute_offsets(stream, lens);
  const auto rationale = rationale_by_unit(stream, options.rationale_lens);
  const auto& cfg = engine.config();
  DualKvCache cache(cfg.n_layers, cfg.model_dim());

  auto decode_mode = [&](int u) -> DecodeMode {
    if (options.teacher_tokens) {
      return Teacher{(*options.teacher_tokens)[static_cast<std::size_t>(u - 1)]};
    }
    return Greedy{stream.unit(u).is_segment() ? kNoteStartToken : kAnswerStartToken};
  };
  std::vector<DecodeResult> decoded(static_cast<std::size_t>(stream.size()));
  auto ingest = [&](int u) {
    engine.ingest_segment(cache, stream.unit(u), offsets, options.within);
  };
  auto decode = [&](int u, const SourceSnapshot& snapshot) {
    decoded[static_cast<std::size_t>(u - 1)] = engine.decode_generated_unit(
        cache, snapshot, u, lens[static_cast<std::size_t>(u - 1)], offsets,
        decode_mode(u));
  };

  if (options.concurrent) {
    std::exception_ptr ingest_error;
    std::thread writer([&] {
      try {
        for (int u = 1; u <= stream.size(); ++u) ingest(u);
      } catch (...) {
        ingest_error = std::current_exception();
      }
      cache.close_source();
    });
    std::exception_ptr decode_error;
    try {
      for (int u = 1; u <= stream.size(); ++u) decode(u, cache.wait_snapshot(u));
    } catch (...) {
      decode_error = std::current_exception();
    }
    writer.join();
    if (ingest_error) std::rethrow_exception(ingest_error);
    if (decode_error) std::rethrow_exception(decode_error);
  } else {
    // Work starts in schedule order; each unit's work runs to completion
    // at its start event.
    for (const auto& ev : result.events) {
      if (ev.kind == EventKind::kIngestStart) {
        ingest(ev.unit_index);
      } else if (ev.kind == EventKind::kDecodeStart) {
        decode(ev.unit_index, cache.snapshot(ev.unit_index));
      }
    }
  }

  result.stream = stream;
  int turn = 0;
  for (int u = 1; u <= stream.size(); ++u) {
    auto& d = decoded[static_cast<std::size_t>(u - 1)];
    GeneratedUnit g;
    g.aligned_index = u;
    g.tokens = d.tokens;
    if (stream.unit(u).is_segment()) {
      g.kind = GeneratedKind::kMemoryNote;
      result.bank.write(result.bank.size() + 1, d.tokens);
    } else {
      g.kind = GeneratedKind::kQaOutput;
      g.answer_begin = static_cast<std::size_t>(rationale[static_cast<std::size_t>(u - 1)]);
      result.answers.push_back({++turn, u, d.tokens, g.answer_begin, d.logits});
    }
    result.stream.append_generated(std::move(g));
    result.generated_logits.push_back(std::move(d.logits));
  }
  return result;
}

std::int64_t ttft(std::span<const ScheduleEvent> events, int turn) {
  int seen = 0;
  for (const auto& ev : events) {
    if (ev.kind != EventKind::kFirstAnswerToken || ++seen != turn) continue;
    for (const auto& a : events) {
      if (a.kind == EventKind::kArrival && a.unit_index == ev.unit_index) {
        return ev.clock - a.clock;
      }
    }
    throw Error(ErrorCode::kTurnNotFound,
                "no arrival event for unit " + std::to_string(ev.unit_index));
  }
  throw Error(ErrorCode::kTurnNotFound,
              "turn " + std::to_string(turn) + " has no first answer token");
}

std::vector<std::int64_t> ttft_all(std::span<const ScheduleEvent> events) {
  const auto turns = std::count_if(events.begin(), events.end(), [](const auto& e) {
    return e.kind == EventKind::kFirstAnswerToken;
  });
  std::vector<std::int64_t> out;
  for (int r = 1; r <= turns; ++r) out.push_back(ttft(events, r));
  return out;
}

}  // namespace streamthink

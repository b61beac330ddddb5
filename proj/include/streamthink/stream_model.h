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
#include <vector>

namespace streamthink {

using TokenId = std::int32_t;

enum class UnitKind { kSegment, kQuestion };

// Visual token grid of one segment, in tokens per axis.
struct VisualGrid {
  std::int64_t t_len = 1;
  std::int64_t h_len = 1;
  std::int64_t w_len = 1;

  std::int64_t token_count() const { return t_len * h_len * w_len; }
  bool operator==(const VisualGrid&) const = default;
};

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
  bool operator==(const TimeSpan&) const = default;
};

// One element of the received stream R_{1:U}.
struct ReceivedUnit {
  UnitKind kind = UnitKind::kSegment;
  int arrival_index = 0;  // 1-based
  VisualGrid grid;                     // segments only
  std::vector<TokenId> text;           // questions only
  std::optional<TimeSpan> wall_time;   // segments only
  std::uint64_t feature_seed = 0;      // seeds the toy visual features

  bool is_segment() const { return kind == UnitKind::kSegment; }
  std::int64_t token_count() const {
    return is_segment() ? grid.token_count()
                        : static_cast<std::int64_t>(text.size());
  }
  bool operator==(const ReceivedUnit&) const = default;
};

enum class GeneratedKind { kMemoryNote, kQaOutput };

// The single output C_u aligned with received unit R_u.
struct GeneratedUnit {
  int aligned_index = 0;
  GeneratedKind kind = GeneratedKind::kMemoryNote;
  std::vector<TokenId> tokens;
  // QA outputs: tokens[0, answer_begin) is the rationale, the rest the answer.
  std::size_t answer_begin = 0;

  bool operator==(const GeneratedUnit&) const = default;
};

struct QuestionTurn {
  int arrival_index = 0;   // idx[Q_r]
  int latest_segment = 0;  // tau_r
  bool operator==(const QuestionTurn&) const = default;
};

class UnitStream {
 public:
  std::vector<ReceivedUnit> received;
  std::vector<GeneratedUnit> generated;
  std::vector<QuestionTurn> turns;

  int size() const { return static_cast<int>(received.size()); }
  int segment_count() const;
  int question_count() const { return static_cast<int>(turns.size()); }

  const ReceivedUnit& unit(int arrival_index) const {
    return received.at(static_cast<std::size_t>(arrival_index - 1));
  }
  // Arrival index of the k-th segment / question (both 1-based).
  int segment_arrival_index(int k) const;
  int question_arrival_index(int k) const;
  // Per-kind ordinal of the unit at `arrival_index` (k in S_k or Q_k).
  int kind_ordinal(int arrival_index) const;

  std::int64_t received_token_count() const;

  // Appends C_{n+1}; throws kInvalidUnit when the kind does not match the
  // aligned received unit or the stream already holds U generated units.
  void append_generated(GeneratedUnit unit);

  bool operator==(const UnitStream&) const = default;
};

// Input description of one unit, in arrival order.
struct UnitDescriptor {
  UnitKind kind = UnitKind::kSegment;
  VisualGrid grid;
  std::optional<TimeSpan> time;
  std::vector<TokenId> text;
  std::optional<std::uint64_t> feature_seed;

  static UnitDescriptor segment(VisualGrid grid,
                                std::optional<TimeSpan> time = std::nullopt);
  static UnitDescriptor question(std::vector<TokenId> text);
  // Question with `len` deterministic placeholder token ids.
  static UnitDescriptor question_of_length(int len, int salt = 0);
};

// Deterministic opaque token ids for text whose content is irrelevant.
std::vector<TokenId> placeholder_tokens(int len, std::uint64_t salt);

// Input-position budget Delta[R_u].
std::int64_t unit_span(const ReceivedUnit& unit);

UnitStream build_stream(std::span<const UnitDescriptor> descriptors);

std::vector<TimeSpan> segment_by_questions(
    double video_duration_s,
    std::span<const double> question_times_s,
    double max_segment_s = 60.0,
    double chunk_s = 30.0);

struct SamplingPlan {
  // fps as an exact fraction.
  std::int64_t fps_num = 1;
  std::int64_t fps_den = 1;
  // Frame budget for the whole video.
  std::optional<std::int64_t> max_frames;
  double video_duration_s = 0.0;

  double fps() const {
    return static_cast<double>(fps_num) / static_cast<double>(fps_den);
  }
  // ceil(duration * fps), at least one, then capped.
  std::int64_t total_frames() const;
  // Uncapped, frame k sits at k / fps.  When the cap binds, the budget is
  // spread evenly: frame k sits at k * duration / total_frames().
  std::vector<double> frame_times() const;
  // Frames whose time falls in [start, end); at least one so that every
  // segment carries visual tokens.
  std::int64_t frames_in(const TimeSpan& span) const;
  bool operator==(const SamplingPlan&) const = default;
};

SamplingPlan plan_sampling(double video_duration_s,
                           std::optional<std::int64_t> frame_cap = std::nullopt);

// Interleaves segment intervals and timed questions into descriptors.  A
// question asked at time t follows every segment that ends at or before t
// and precedes the rest.
std::vector<UnitDescriptor> interleave_timeline(
    std::span<const TimeSpan> segments,
    std::span<const double> question_times_s,
    const SamplingPlan& plan,
    std::int64_t grid_h,
    std::int64_t grid_w,
    int question_len);

}  // namespace streamthink

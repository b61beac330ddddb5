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

#include "streamthink/stream_model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "streamthink/error.h"
#include "util/splitmix.h"

namespace streamthink {

namespace {

constexpr double kTimeEps = 1e-9;

bool positive_grid(const VisualGrid& g) {
  return g.t_len >= 1 && g.h_len >= 1 && g.w_len >= 1;
}

}  // namespace

int UnitStream::segment_count() const {
  return static_cast<int>(std::count_if(
      received.begin(), received.end(),
      [](const ReceivedUnit& u) { return u.is_segment(); }));
}

int UnitStream::segment_arrival_index(int k) const {
  int seen = 0;
  for (const auto& u : received) {
    if (u.is_segment() && ++seen == k) return u.arrival_index;
  }
  throw Error(ErrorCode::kInvalidUnit,
              "segment " + std::to_string(k) + " not in stream");
}

int UnitStream::question_arrival_index(int k) const {
  if (k < 1 || k > question_count()) {
    throw Error(ErrorCode::kInvalidUnit,
                "question " + std::to_string(k) + " not in stream");
  }
  return turns[static_cast<std::size_t>(k - 1)].arrival_index;
}

int UnitStream::kind_ordinal(int arrival_index) const {
  const auto kind = unit(arrival_index).kind;
  int ordinal = 0;
  for (int u = 1; u <= arrival_index; ++u) {
    if (unit(u).kind == kind) ++ordinal;
  }
  return ordinal;
}

std::int64_t UnitStream::received_token_count() const {
  std::int64_t total = 0;
  for (const auto& u : received) total += u.token_count();
  return total;
}

void UnitStream::append_generated(GeneratedUnit unit) {
  const int next = static_cast<int>(generated.size()) + 1;
  if (next > size()) {
    throw Error(ErrorCode::kInvalidUnit,
                "stream already holds one generated unit per received unit");
  }
  if (unit.aligned_index != next) {
    throw Error(ErrorCode::kInvalidUnit,
                "generated unit aligned to " +
                    std::to_string(unit.aligned_index) + ", expected " +
                    std::to_string(next));
  }
  const bool want_note = this->unit(next).is_segment();
  if ((unit.kind == GeneratedKind::kMemoryNote) != want_note) {
    throw Error(ErrorCode::kInvalidUnit,
                "generated kind does not match received unit " +
                    std::to_string(next));
  }
  if (unit.answer_begin > unit.tokens.size()) {
    throw Error(ErrorCode::kInvalidUnit, "answer span out of range");
  }
  generated.push_back(std::move(unit));
}

UnitDescriptor UnitDescriptor::segment(VisualGrid grid,
                                       std::optional<TimeSpan> time) {
  UnitDescriptor d;
  d.kind = UnitKind::kSegment;
  d.grid = grid;
  d.time = time;
  return d;
}

UnitDescriptor UnitDescriptor::question(std::vector<TokenId> text) {
  UnitDescriptor d;
  d.kind = UnitKind::kQuestion;
  d.text = std::move(text);
  return d;
}

UnitDescriptor UnitDescriptor::question_of_length(int len, int salt) {
  return question(placeholder_tokens(len, 0x51ULL + static_cast<unsigned>(salt)));
}

std::vector<TokenId> placeholder_tokens(int len, std::uint64_t salt) {
  std::vector<TokenId> out;
  out.reserve(static_cast<std::size_t>(std::max(len, 0)));
  std::uint64_t state = salt * 0x9E3779B97F4A7C15ULL + 1;
  for (int i = 0; i < len; ++i) {
    out.push_back(static_cast<TokenId>(util::splitmix64(state) & 0x7fffffff));
  }
  return out;
}

std::int64_t unit_span(const ReceivedUnit& unit) {
  if (unit.is_segment()) {
    return std::max({unit.grid.t_len, unit.grid.h_len, unit.grid.w_len});
  }
  return static_cast<std::int64_t>(unit.text.size());
}

UnitStream build_stream(std::span<const UnitDescriptor> descriptors) {
  if (descriptors.empty()) {
    throw Error(ErrorCode::kEmptyStream, "stream has no units");
  }
  UnitStream stream;
  stream.received.reserve(descriptors.size());
  int segments = 0;
  std::optional<double> last_end;
  for (const auto& d : descriptors) {
    ReceivedUnit unit;
    unit.kind = d.kind;
    unit.arrival_index = static_cast<int>(stream.received.size()) + 1;
    const std::string where = "unit " + std::to_string(unit.arrival_index);
    if (d.kind == UnitKind::kSegment) {
      if (!positive_grid(d.grid)) {
        throw Error(ErrorCode::kInvalidUnit, where + ": grid axes must be >= 1");
      }
      if (d.time) {
        if (!(d.time->start_s >= 0.0) || !(d.time->end_s > d.time->start_s)) {
          throw Error(ErrorCode::kNonChronologicalTimestamps,
                      where + ": time span must satisfy 0 <= start < end");
        }
        if (last_end && d.time->start_s < *last_end - kTimeEps) {
          throw Error(ErrorCode::kNonChronologicalTimestamps,
                      where + ": segment overlaps or precedes the previous one");
        }
        last_end = d.time->end_s;
      }
      unit.grid = d.grid;
      unit.wall_time = d.time;
      unit.feature_seed =
          d.feature_seed.value_or(static_cast<std::uint64_t>(unit.arrival_index));
      ++segments;
    } else {
      if (segments == 0) {
        throw Error(ErrorCode::kQuestionBeforeAnySegment,
                    where + ": question precedes every segment");
      }
      if (d.text.empty()) {
        throw Error(ErrorCode::kInvalidUnit, where + ": empty question text");
      }
      for (TokenId t : d.text) {
        if (t < 0) {
          throw Error(ErrorCode::kInvalidUnit, where + ": negative token id");
        }
      }
      unit.text = d.text;
      stream.turns.push_back({unit.arrival_index, segments});
    }
    stream.received.push_back(std::move(unit));
  }
  return stream;
}

std::vector<TimeSpan> segment_by_questions(
    double video_duration_s,
    std::span<const double> question_times_s,
    double max_segment_s,
    double chunk_s) {
  if (!(video_duration_s > 0.0) || !(chunk_s > 0.0) ||
      !(max_segment_s > chunk_s) || !std::isfinite(video_duration_s)) {
    throw Error(ErrorCode::kInvalidDurations,
                "need duration > 0 and max_segment > chunk > 0");
  }
  std::vector<double> bounds{0.0};
  for (double t : question_times_s) {
    if (!(t > 0.0) || t > video_duration_s + kTimeEps) {
      throw Error(ErrorCode::kInvalidDurations,
                  "question time " + std::to_string(t) +
                      " outside (0, duration]");
    }
    if (!(t > bounds.back())) {
      throw Error(ErrorCode::kUnorderedQuestionTimes,
                  "question times must be strictly increasing");
    }
    bounds.push_back(t);
  }
  if (bounds.back() < video_duration_s - kTimeEps) {
    bounds.push_back(video_duration_s);
  }

  std::vector<TimeSpan> out;
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    const double start = bounds[i - 1];
    const double end = bounds[i];
    if (end - start <= max_segment_s + kTimeEps) {
      out.push_back({start, end});
      continue;
    }
    // Pieces are placed at start + n * chunk so rounding never accumulates.
    for (int n = 0;; ++n) {
      const double piece_start = start + n * chunk_s;
      const double piece_end = start + (n + 1) * chunk_s;
      if (end - piece_start <= chunk_s + kTimeEps) {
        out.push_back({piece_start, end});
        break;
      }
      out.push_back({piece_start, piece_end});
    }
  }
  return out;
}

std::int64_t SamplingPlan::total_frames() const {
  const double exact = video_duration_s * static_cast<double>(fps_num) /
                       static_cast<double>(fps_den);
  auto frames = static_cast<std::int64_t>(std::ceil(exact - kTimeEps));
  frames = std::max<std::int64_t>(frames, 1);
  if (max_frames) frames = std::min(frames, *max_frames);
  return frames;
}

namespace {

// Index of the first frame at or after time t.
std::int64_t first_frame_at(const SamplingPlan& plan, double t) {
  const std::int64_t n = plan.total_frames();
  const bool capped = plan.max_frames && n == *plan.max_frames &&
                      plan.video_duration_s * plan.fps() > static_cast<double>(n) + kTimeEps;
  const double per_second =
      capped ? static_cast<double>(n) / plan.video_duration_s : plan.fps();
  const auto k = static_cast<std::int64_t>(std::ceil(t * per_second - kTimeEps));
  return std::clamp<std::int64_t>(k, 0, n);
}

}  // namespace

std::vector<double> SamplingPlan::frame_times() const {
  const std::int64_t n = total_frames();
  const bool capped = max_frames && video_duration_s * fps() > static_cast<double>(n) + kTimeEps;
  std::vector<double> out;
  for (std::int64_t k = 0; k < n; ++k) {
    out.push_back(capped ? static_cast<double>(k) * video_duration_s / static_cast<double>(n)
                         : static_cast<double>(k * fps_den) / static_cast<double>(fps_num));
  }
  return out;
}

std::int64_t SamplingPlan::frames_in(const TimeSpan& span) const {
  const auto count = first_frame_at(*this, span.end_s) - first_frame_at(*this, span.start_s);
  return std::max<std::int64_t>(count, 1);
}

SamplingPlan plan_sampling(double video_duration_s,
                           std::optional<std::int64_t> frame_cap) {
  if (!(video_duration_s > 0.0) || !std::isfinite(video_duration_s)) {
    throw Error(ErrorCode::kInvalidDurations, "duration must be positive");
  }
  if (frame_cap && *frame_cap < 1) {
    throw Error(ErrorCode::kInvalidDurations, "frame cap must be >= 1");
  }
  SamplingPlan plan;
  if (video_duration_s < 300.0) {
    plan.fps_num = 1;
    plan.fps_den = 1;
  } else if (video_duration_s <= 600.0) {
    plan.fps_num = 1;
    plan.fps_den = 2;
  } else {
    plan.fps_num = 1;
    plan.fps_den = 5;
  }
  plan.max_frames = frame_cap;
  plan.video_duration_s = video_duration_s;
  return plan;
}

std::vector<UnitDescriptor> interleave_timeline(
    std::span<const TimeSpan> segments,
    std::span<const double> question_times_s,
    const SamplingPlan& plan,
    std::int64_t grid_h,
    std::int64_t grid_w,
    int question_len) {
  std::vector<UnitDescriptor> out;
  std::size_t q = 0;
  int salt = 0;
  for (const auto& seg : segments) {
    // A question asked before this segment ends cannot see it.
    while (q < question_times_s.size() &&
           question_times_s[q] < seg.end_s - kTimeEps) {
      out.push_back(UnitDescriptor::question_of_length(question_len, salt++));
      ++q;
    }
    out.push_back(UnitDescriptor::segment(
        {plan.frames_in(seg), grid_h, grid_w}, seg));
  }
  for (; q < question_times_s.size(); ++q) {
    out.push_back(UnitDescriptor::question_of_length(question_len, salt++));
  }
  return out;
}

}  // namespace streamthink

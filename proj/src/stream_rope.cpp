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

#include "streamthink/stream_rope.h"

#include <cmath>
#include <string>

#include "streamthink/error.h"

namespace streamthink {

std::vector<std::int64_t> generated_offsets(std::span<const int> generated_lens) {
  std::vector<std::int64_t> out;
  out.reserve(generated_lens.size());
  std::int64_t next = 0;
  for (int len : generated_lens) {
    out.push_back(next);
    next += len;
  }
  return out;
}

OffsetTable compute_offsets(const UnitStream& stream,
                            std::span<const int> generated_lens) {
  if (static_cast<int>(generated_lens.size()) > stream.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(generated_lens.size()) +
                    " generated lengths for " + std::to_string(stream.size()) +
                    " received units");
  }
  for (int len : generated_lens) {
    if (len < 0) {
      throw Error(ErrorCode::kLengthMismatch,
                  "generated lengths must be non-negative");
    }
  }
  OffsetTable table;
  std::int64_t budget = 0;
  for (const auto& unit : stream.received) {
    table.unit_offsets.push_back(budget);
    (unit.is_segment() ? table.seg_offsets : table.question_offsets)
        .push_back(budget);
    budget += unit_span(unit);
  }
  table.input_budget = budget;
  table.gen_offsets = generated_offsets(generated_lens);
  table.gen_lens.assign(generated_lens.begin(), generated_lens.end());
  return table;
}

std::vector<TokenPosition> received_positions(const ReceivedUnit& unit,
                                              std::int64_t base) {
  std::vector<TokenPosition> out;
  out.reserve(static_cast<std::size_t>(unit.token_count()));
  if (unit.is_segment()) {
    for (std::int64_t t = 0; t < unit.grid.t_len; ++t) {
      for (std::int64_t h = 0; h < unit.grid.h_len; ++h) {
        for (std::int64_t w = 0; w < unit.grid.w_len; ++w) {
          out.push_back({t + base, h + base, w + base});
        }
      }
    }
  } else {
    for (std::size_t n = 0; n < unit.text.size(); ++n) {
      out.push_back(TokenPosition::text(static_cast<std::int64_t>(n) + base));
    }
  }
  return out;
}

std::vector<TokenPosition> generated_positions(std::int64_t base, int length) {
  std::vector<TokenPosition> out;
  out.reserve(static_cast<std::size_t>(std::max(length, 0)));
  for (int n = 0; n < length; ++n) out.push_back(TokenPosition::text(base + n));
  return out;
}

PositionAssignment assign_positions(const UnitStream& stream,
                                    const OffsetTable& offsets) {
  if (static_cast<int>(offsets.unit_offsets.size()) != stream.size()) {
    throw Error(ErrorCode::kLengthMismatch, "offsets built for another stream");
  }
  PositionAssignment out;
  for (const auto& unit : stream.received) {
    auto pos = received_positions(unit, offsets.received_offset(unit.arrival_index));
    out.received.insert(out.received.end(), pos.begin(), pos.end());
  }
  for (std::size_t k = 0; k < offsets.gen_offsets.size(); ++k) {
    auto pos = generated_positions(offsets.gen_offsets[k], offsets.gen_lens[k]);
    out.generated.insert(out.generated.end(), pos.begin(), pos.end());
  }
  return out;
}

RopeConfig RopeConfig::with_default_bands(int head_dim, double base_theta) {
  RopeConfig cfg;
  cfg.head_dim = head_dim;
  cfg.base_theta = base_theta;
  const int pairs = head_dim / 2;
  for (int axis = 0; axis < 3; ++axis) {
    cfg.axis_bands[static_cast<std::size_t>(axis)] =
        2 * (pairs / 3 + (axis < pairs % 3 ? 1 : 0));
  }
  return cfg;
}

void RopeConfig::validate() const {
  if (head_dim <= 0 || head_dim % 2 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "head_dim must be positive and even");
  }
  int sum = 0;
  for (int band : axis_bands) {
    if (band < 0 || band % 2 != 0) {
      throw Error(ErrorCode::kInvalidConfig, "axis bands must be even and >= 0");
    }
    sum += band;
  }
  if (sum != head_dim) {
    throw Error(ErrorCode::kInvalidConfig, "axis bands must sum to head_dim");
  }
  if (!(base_theta > 0.0) || !std::isfinite(base_theta)) {
    throw Error(ErrorCode::kInvalidConfig, "base_theta must be positive");
  }
}

void rotate_in_place(std::span<double> vec,
                     const TokenPosition& position,
                     const RopeConfig& config) {
  const std::array<std::int64_t, 3> axis_pos{position.t, position.h, position.w};
  std::size_t offset = 0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const int band = config.axis_bands[axis];
    const auto p = static_cast<double>(axis_pos[axis]);
    for (int i = 0; i < band / 2; ++i) {
      const double freq =
          std::pow(config.base_theta, -2.0 * i / static_cast<double>(band));
      const double angle = p * freq;
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      double& x = vec[offset + 2 * static_cast<std::size_t>(i)];
      double& y = vec[offset + 2 * static_cast<std::size_t>(i) + 1];
      const double rx = x * c - y * s;
      const double ry = x * s + y * c;
      x = rx;
      y = ry;
    }
    offset += static_cast<std::size_t>(band);
  }
}

std::vector<double> apply_rope(std::span<const double> vec,
                               const TokenPosition& position,
                               const RopeConfig& config) {
  config.validate();
  if (static_cast<int>(vec.size()) != config.head_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector of length " + std::to_string(vec.size()) +
                    ", head_dim " + std::to_string(config.head_dim));
  }
  std::vector<double> out(vec.begin(), vec.end());
  rotate_in_place(out, position, config);
  return out;
}

}  // namespace streamthink

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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "generators.h"
#include "streamthink/cot_format.h"

namespace streamthink::testing {

struct CotSample {
  UnitStream stream;
  std::vector<std::string> answers;
  CotDocument doc;
};

// Short phrases of random lowercase words.
std::vector<std::string> random_answers(Gen& g, int n);

CotSample random_cot_sample(Gen& g, const StreamShape& shape = {});

enum class CotMutation {
  kDropChunk,
  kDuplicateChunk,
  kSwapChunks,
  kFutureSegment,
  kAnswerLeak,
  kAnswerMismatch,
};

inline constexpr CotMutation kAllMutations[] = {
    CotMutation::kDropChunk,      CotMutation::kDuplicateChunk, CotMutation::kSwapChunks,
    CotMutation::kFutureSegment,  CotMutation::kAnswerLeak,     CotMutation::kAnswerMismatch,
};

std::string_view mutation_name(CotMutation m);

// Constraint id the validator must report for a mutant.
std::string_view expected_constraint(CotMutation m);

// nullopt when the document offers nothing to mutate (no question for the
// answer operators, fewer than two chunks for a swap).
std::optional<CotDocument> mutate(const CotDocument& doc, CotMutation m, Gen& g);

}  // namespace streamthink::testing

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
#include <random>
#include <span>
#include <vector>

#include "streamthink/engine.h"
#include "streamthink/stream_model.h"

namespace streamthink::testing {

// Seeded source of random test inputs.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  double real(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  std::uint64_t bits() { return rng_(); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct StreamShape {
  int min_units = 1;
  int max_units = 12;
  int max_unit_tokens = 6;  // per received unit
  double question_prob = 0.35;
};

VisualGrid random_grid(Gen& g, int max_tokens);
std::vector<UnitDescriptor> random_descriptors(Gen& g, const StreamShape& shape);
UnitStream random_stream(Gen& g, const StreamShape& shape);
std::vector<int> random_lengths(Gen& g, int n, int lo, int hi);
std::vector<std::vector<TokenId>> random_tokens(Gen& g, std::span<const int> lens, int vocab);
// model_dim <= max_model_dim, n_layers <= max_layers, even head_dim.
EngineConfig random_engine_config(Gen& g, int max_model_dim, int max_layers);

// <S1, Q1, S2, Q2, S3, S4, Q3> with 2x2x2 segments and 3-token questions.
std::vector<UnitDescriptor> seven_unit_descriptors();
UnitStream seven_unit_stream();

}  // namespace streamthink::testing

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
#include <string_view>
#include <vector>

namespace streamthink {

enum class ArrivalProcess { kDeterministic, kPoisson };

struct RateConfig {
  double lambda = 1.0;   // segments per second
  double mu = 2.0;       // segments per second the ingester can absorb
  double t_dec = 10.0;   // decode pause, seconds
  double c_tok = 0.02;   // seconds per output token
  double l_tokens = 0.0; // output tokens per decode step

  // Simulator settings.
  double decode_period = 0.0;    // seconds between decode windows; 0 picks one
  double first_decode_at = 1.0;  // start of the first decode window
  double overhead = 0.0;         // service stall per window when decoupled
  int granularity = 10000;       // arrival chunks per segment
  ArrivalProcess arrivals = ArrivalProcess::kDeterministic;
  std::uint64_t seed = 0;

  double rho() const { return lambda / mu; }
  // Throws kInvalidConfig.
  void validate() const;
  double effective_period() const;
};

double backlog_closed_form(const RateConfig& cfg);

struct CatchUpTime {
  bool divergent = false;
  double seconds = 0.0;
};

CatchUpTime catch_up_closed_form(const RateConfig& cfg);

// Extra stream lag caused by an L-token answer.  Throws kDivergent for rho >= 1.
double quality_coupling(const RateConfig& cfg);

enum class LatencyMode { kInterleaved, kDecoupled };

std::string_view latency_mode_name(LatencyMode mode);

struct BacklogSample {
  double time_s = 0.0;
  double backlog = 0.0;
};

struct BacklogTrace {
  LatencyMode mode = LatencyMode::kInterleaved;
  std::vector<BacklogSample> samples;
  // Backlog at the start of every decode window inside the horizon, plus the
  // final state as the last entry.
  std::vector<BacklogSample> cycle_boundaries;
  // Seconds from the end of each decode window until the backlog first falls
  // back to its level at the start of that window.  Windows that never
  // recover inside the horizon are absent.
  std::vector<double> cycle_catch_ups;
  std::optional<double> catch_up_s;  // first window's value
  double arrival_interval_s = 0.0;   // 1 / lambda
};

// Throws kInvalidHorizon when horizon or sample_dt is not positive, or when
// rho < 1 and the horizon ends before the first window could recover.
BacklogTrace simulate(const RateConfig& cfg, LatencyMode mode,
                      double horizon_s, double sample_dt);

}  // namespace streamthink

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

#include "streamthink/latency_model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "streamthink/error.h"

namespace streamthink {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

class ArrivalClock {
 public:
  explicit ArrivalClock(const RateConfig& cfg)
      : rate_(cfg.lambda * cfg.granularity),
        poisson_(cfg.arrivals == ArrivalProcess::kPoisson),
        rng_(cfg.seed),
        gap_(rate_) {
    advance();
  }
  double next() const { return next_; }
  void advance() {
    if (poisson_) {
      next_ += gap_(rng_);
    } else {
      // Computed from the count so rounding does not accumulate.
      next_ = static_cast<double>(++count_) / rate_;
    }
  }

 private:
  double rate_;
  bool poisson_;
  std::mt19937_64 rng_;
  std::exponential_distribution<double> gap_;
  std::int64_t count_ = 0;
  double next_ = 0.0;
};

struct Watcher {
  int window = 0;
  double end = 0.0;
  double target = 0.0;
};

}  // namespace

void RateConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, what);
  };
  if (!(lambda > 0.0) || !(mu > 0.0)) fail("lambda and mu must be positive");
  if (!(t_dec >= 0.0) || !(c_tok >= 0.0) || !(l_tokens >= 0.0)) {
    fail("t_dec, c_tok and l_tokens must be non-negative");
  }
  if (!(overhead >= 0.0) || !(first_decode_at >= 0.0)) {
    fail("overhead and first_decode_at must be non-negative");
  }
  if (granularity < 1) fail("granularity must be >= 1");
  if (decode_period != 0.0 &&
      !(decode_period > std::max(t_dec, overhead))) {
    fail("decode_period must exceed the decode window");
  }
}

double RateConfig::effective_period() const {
  if (decode_period > 0.0) return decode_period;
  const double r = rho();
  return r < 1.0 ? 2.0 * t_dec / (1.0 - r) + 1.0 : 2.0 * t_dec + 1.0;
}

double backlog_closed_form(const RateConfig& cfg) {
  cfg.validate();
  return cfg.lambda * cfg.t_dec;
}

CatchUpTime catch_up_closed_form(const RateConfig& cfg) {
  cfg.validate();
  const double r = cfg.rho();
  if (r >= 1.0) return {true, 0.0};
  return {false, r / (1.0 - r) * cfg.t_dec};
}

double quality_coupling(const RateConfig& cfg) {
  cfg.validate();
  const double r = cfg.rho();
  if (r >= 1.0) {
    throw Error(ErrorCode::kDivergent, "rho >= 1 has no finite catch-up");
  }
  return r / (1.0 - r) * cfg.c_tok * cfg.l_tokens;
}

std::string_view latency_mode_name(LatencyMode mode) {
  return mode == LatencyMode::kInterleaved ? "interleaved" : "decoupled";
}

BacklogTrace simulate(const RateConfig& cfg, LatencyMode mode,
                      double horizon_s, double sample_dt) {
  cfg.validate();
  if (!(horizon_s > 0.0) || !(sample_dt > 0.0)) {
    throw Error(ErrorCode::kInvalidHorizon,
                "horizon and sample interval must be positive");
  }
  const double rho = cfg.rho();
  double needed = cfg.first_decode_at + cfg.t_dec;
  if (rho < 1.0) needed += rho / (1.0 - rho) * cfg.t_dec;
  if (horizon_s < needed) {
    throw Error(ErrorCode::kInvalidHorizon,
                "horizon " + std::to_string(horizon_s) +
                    " s ends before the first decode cycle completes (" +
                    std::to_string(needed) + " s)");
  }

  const double period = cfg.effective_period();
  const double stall =
      mode == LatencyMode::kInterleaved ? cfg.t_dec : cfg.overhead;
  const double chunk = 1.0 / cfg.granularity;

  BacklogTrace trace;
  trace.mode = mode;
  trace.arrival_interval_s = 1.0 / cfg.lambda;

  ArrivalClock arrivals(cfg);
  double t = 0.0;
  double backlog = 0.0;
  int window = 0;
  double next_window = cfg.first_decode_at;
  double stall_until = -1.0;
  std::int64_t sample_index = 0;
  auto sample_time = [&] { return static_cast<double>(sample_index) * sample_dt; };
  std::vector<Watcher> pending;  // windows whose end has not been reached
  std::vector<Watcher> active;   // windows waiting for recovery

  auto record_catch_up = [&](const Watcher& w, double at) {
    trace.cycle_catch_ups.push_back(at - w.end);
    if (w.window == 0) trace.catch_up_s = at - w.end;
  };

  while (true) {
    const double t_next = std::min(
        {arrivals.next(), next_window, sample_time(),
         pending.empty() ? kNever : pending.front().end, horizon_s});
    const bool serving = t >= stall_until;
    if (serving && backlog > 0.0 && t_next > t) {
      const double drained = std::max(0.0, backlog - cfg.mu * (t_next - t));
      for (auto it = active.begin(); it != active.end();) {
        if (drained <= it->target) {
          record_catch_up(*it, t + (backlog - it->target) / cfg.mu);
          it = active.erase(it);
        } else {
          ++it;
        }
      }
      backlog = drained;
    }
    t = t_next;

    if (t == next_window) {
      trace.cycle_boundaries.push_back({t, backlog});
      pending.push_back({window, t + cfg.t_dec, backlog});
      stall_until = t + stall;
      ++window;
      next_window = cfg.first_decode_at + window * period;
    }
    while (!pending.empty() && pending.front().end <= t) {
      const Watcher w = pending.front();
      pending.erase(pending.begin());
      if (backlog <= w.target) {
        record_catch_up(w, t);
      } else {
        active.push_back(w);
      }
    }
    while (arrivals.next() <= t) {
      backlog += chunk;
      arrivals.advance();
    }
    if (t == sample_time() && t <= horizon_s) {
      trace.samples.push_back({t, backlog});
      ++sample_index;
    }
    if (t >= horizon_s) break;
  }
  trace.cycle_boundaries.push_back({horizon_s, backlog});
  return trace;
}

}  // namespace streamthink

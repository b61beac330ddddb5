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

#include <gtest/gtest.h>

#include <cmath>

#include "streamthink/error.h"
#include "streamthink/latency_model.h"

namespace streamthink {
namespace {

RateConfig rates(double rho, double t_dec) {
  RateConfig c;
  c.lambda = 1.0;
  c.mu = 1.0 / rho;
  c.t_dec = t_dec;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

TEST(ClosedForm, WorkedValues) {
  RateConfig c;
  c.lambda = 1.0;
  c.mu = 2.0;
  c.t_dec = 10.0;
  EXPECT_DOUBLE_EQ(backlog_closed_form(c), 10.0);
  EXPECT_DOUBLE_EQ(catch_up_closed_form(c).seconds, 10.0);
  c.mu = 1.0 / 0.9;
  EXPECT_NEAR(catch_up_closed_form(c).seconds, 90.0, 1e-9);
  c.mu = 1.0;
  EXPECT_TRUE(catch_up_closed_form(c).divergent);
  c.mu = 0.5;
  EXPECT_TRUE(catch_up_closed_form(c).divergent);
}

TEST(ClosedForm, QualityCoupling) {
  RateConfig c;
  c.lambda = 1.0;
  c.mu = 2.0;
  c.c_tok = 0.02;
  c.l_tokens = 100;
  EXPECT_NEAR(quality_coupling(c), 2.0, 1e-12);
  c.l_tokens = 0;
  EXPECT_EQ(quality_coupling(c), 0.0);
  c.mu = 1.0;
  EXPECT_EQ(code_of([&] { quality_coupling(c); }), ErrorCode::kDivergent);
}

TEST(ClosedForm, ScalingLaws) {
  for (double rho : {0.1, 0.4, 0.7}) {
    for (double t : {1.0, 3.0, 8.0}) {
      const auto c = rates(rho, t);
      const auto c2 = rates(rho, 2 * t);
      EXPECT_NEAR(catch_up_closed_form(c2).seconds, 2 * catch_up_closed_form(c).seconds, 1e-9);
      EXPECT_NEAR(backlog_closed_form(c2), 2 * backlog_closed_form(c), 1e-9);
      EXPECT_LT(catch_up_closed_form(c).seconds, catch_up_closed_form(rates(rho + 0.1, t)).seconds);
      auto fast = c;
      fast.lambda *= 3;
      fast.mu *= 3;
      EXPECT_NEAR(catch_up_closed_form(fast).seconds, catch_up_closed_form(c).seconds, 1e-9);
      EXPECT_NEAR(backlog_closed_form(fast), 3 * backlog_closed_form(c), 1e-9);
    }
  }
}

TEST(RateConfig, Validation) {
  const auto invalid = [](const std::function<void(RateConfig&)>& edit) {
    RateConfig c;
    edit(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidConfig;
    }
    return false;
  };
  EXPECT_FALSE(invalid([](RateConfig&) {}));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.lambda = 0; }));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.mu = -1; }));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.t_dec = -1; }));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.c_tok = -0.1; }));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.granularity = 0; }));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.decode_period = 5; }));
  EXPECT_TRUE(invalid([](RateConfig& c) { c.lambda = std::nan(""); }));
}

TEST(Simulate, CatchUpMatchesClosedForm) {
  for (double rho : {0.2, 0.5, 0.8}) {
    for (double t : {1.0, 10.0}) {
      const auto c = rates(rho, t);
      const double period = c.effective_period();
      const auto tr = simulate(c, LatencyMode::kInterleaved, c.first_decode_at + 3 * period, 0.5);
      ASSERT_TRUE(tr.catch_up_s.has_value());
      const double want = catch_up_closed_form(c).seconds;
      EXPECT_NEAR(*tr.catch_up_s, want, 0.01 * want) << rho << " " << t;
      ASSERT_GE(tr.cycle_catch_ups.size(), 2u);
      for (double v : tr.cycle_catch_ups) EXPECT_NEAR(v, want, 0.01 * want);
      EXPECT_DOUBLE_EQ(tr.arrival_interval_s, 1.0);
    }
  }
}

TEST(Simulate, DecoupledRecoversWithinOneArrival) {
  for (double rho : {0.3, 0.9}) {
    auto c = rates(rho, 10.0);
    const auto tr = simulate(c, LatencyMode::kDecoupled, c.first_decode_at + 3 * c.effective_period(), 1.0);
    ASSERT_TRUE(tr.catch_up_s.has_value());
    EXPECT_LE(*tr.catch_up_s, tr.arrival_interval_s);
    c.overhead = 0.5;
    const auto with_stall = simulate(c, LatencyMode::kDecoupled, 200, 1.0);
    ASSERT_TRUE(with_stall.catch_up_s.has_value());
    EXPECT_LE(*with_stall.catch_up_s, with_stall.arrival_interval_s);
  }
}

TEST(Simulate, DecoupledBacklogNeverExceedsInterleaved) {
  const auto c = rates(0.6, 5.0);
  const auto a = simulate(c, LatencyMode::kInterleaved, 120, 0.25);
  const auto b = simulate(c, LatencyMode::kDecoupled, 120, 0.25);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.samples[i].time_s, b.samples[i].time_s);
    EXPECT_LE(b.samples[i].backlog, a.samples[i].backlog + 1e-9);
    EXPECT_GE(b.samples[i].backlog, 0.0);
  }
}

TEST(Simulate, OverloadedBacklogGrowsEveryCycle) {
  const auto c = rates(1.05, 5.0);
  ASSERT_NEAR(c.rho(), 1.05, 1e-12);
  const auto tr = simulate(c, LatencyMode::kInterleaved, 200, 1.0);
  ASSERT_GE(tr.cycle_boundaries.size(), 4u);
  for (std::size_t i = 1; i < tr.cycle_boundaries.size(); ++i) {
    EXPECT_GT(tr.cycle_boundaries[i].backlog, tr.cycle_boundaries[i - 1].backlog);
  }
  EXPECT_FALSE(tr.catch_up_s.has_value());
}

TEST(Simulate, PoissonIsSeeded) {
  auto c = rates(0.5, 4.0);
  c.arrivals = ArrivalProcess::kPoisson;
  c.granularity = 1;
  c.seed = 11;
  const auto a = simulate(c, LatencyMode::kInterleaved, 100, 0.5);
  const auto b = simulate(c, LatencyMode::kInterleaved, 100, 0.5);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  bool differs = false;
  c.seed = 12;
  const auto d = simulate(c, LatencyMode::kInterleaved, 100, 0.5);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].backlog, b.samples[i].backlog);
    differs |= a.samples[i].backlog != d.samples[i].backlog;
  }
  EXPECT_TRUE(differs);
}

TEST(Simulate, HorizonChecks) {
  const auto c = rates(0.5, 10.0);
  EXPECT_EQ(code_of([&] { simulate(c, LatencyMode::kInterleaved, 0, 1); }),
            ErrorCode::kInvalidHorizon);
  EXPECT_EQ(code_of([&] { simulate(c, LatencyMode::kInterleaved, 100, 0); }),
            ErrorCode::kInvalidHorizon);
  // First window ends at 11 s and needs another 10 s to recover.
  EXPECT_EQ(code_of([&] { simulate(c, LatencyMode::kInterleaved, 20.5, 1); }),
            ErrorCode::kInvalidHorizon);
  EXPECT_NO_THROW(simulate(c, LatencyMode::kInterleaved, 21, 1));
}

}  // namespace
}  // namespace streamthink

// Copyright 2026 The Subnet Ensembles Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "subnet/errors.hpp"
#include "subnet/schedules.hpp"

namespace subnet {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(OneCycle, HitsItsThreeAnchors) {
  const Schedule s = Schedule::one_cycle(0.001, 0.1, 1e-7, 0.1, 100);
  EXPECT_NEAR(lr_at(s, 0), 0.001, 1e-15);
  EXPECT_NEAR(lr_at(s, 10), 0.1, 1e-15);
  EXPECT_NEAR(lr_at(s, 100), 1e-7, 1e-15);
}

TEST(OneCycle, CoolPhaseFollowsCosine) {
  const Schedule s = Schedule::one_cycle(0.001, 0.1, 1e-7, 0.1, 100);
  // Midpoint of the cool phase: t = 55, phase 0.5.
  const double expected = 1e-7 + 0.5 * (0.1 - 1e-7) * (1.0 + std::cos(kPi * 0.5));
  EXPECT_NEAR(lr_at(s, 55), expected, 1e-15);
  for (std::size_t t = 10; t <= 100; ++t) {
    const double phase = (static_cast<double>(t) - 10.0) / 90.0;
    EXPECT_NEAR(lr_at(s, t), 1e-7 + 0.5 * (0.1 - 1e-7) * (1.0 + std::cos(kPi * phase)), 1e-15);
  }
}

TEST(OneCycle, WarmPhaseRisesMonotonically) {
  const Schedule s = Schedule::one_cycle(0.001, 0.1, 1e-7, 0.1, 100);
  for (std::size_t t = 1; t <= 10; ++t) EXPECT_GT(lr_at(s, t), lr_at(s, t - 1));
  for (std::size_t t = 11; t <= 100; ++t) EXPECT_LT(lr_at(s, t), lr_at(s, t - 1));
}

TEST(Momentum, InverseCycle) {
  Schedule s = Schedule::one_cycle(0.001, 0.1, 1e-7, 0.1, 100);
  s.momentum = MomentumCycle{0.95, 0.85};
  EXPECT_EQ(momentum_at(s, 0), 0.95);
  EXPECT_NEAR(momentum_at(s, 10), 0.85, 1e-15);
  EXPECT_NEAR(momentum_at(s, 100), 0.95, 1e-15);
  // Mid-warm: mirror of the learning-rate ramp.
  const double expected = 0.95 - (0.95 - 0.85) * 0.5 * (1.0 - std::cos(kPi * 0.5));
  EXPECT_NEAR(momentum_at(s, 5), expected, 1e-15);
  EXPECT_THROW(momentum_at(Schedule::constant(0.1, 10), 0), ConfigError);
}

TEST(StepDecay, DropsAtBreakpoints) {
  const Schedule s = Schedule::step_decay(0.1, {0.5, 0.9}, {0.1, 0.1}, 100);
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 0.1);
  EXPECT_DOUBLE_EQ(lr_at(s, 49), 0.1);
  EXPECT_NEAR(lr_at(s, 51), 0.01, 1e-15);
  EXPECT_NEAR(lr_at(s, 95), 0.001, 1e-15);
}

TEST(Constant, IsConstant) {
  const Schedule s = Schedule::constant(0.01, 50);
  for (std::size_t t = 0; t <= 50; ++t) EXPECT_EQ(lr_at(s, t), 0.01);
}

TEST(LinearDecay, InterpolatesBetweenFractions) {
  const Schedule s = Schedule::linear_decay(0.1, 0.01, 0.5, 0.9, 100);
  EXPECT_EQ(lr_at(s, 0), 0.1);
  EXPECT_EQ(lr_at(s, 50), 0.1);
  EXPECT_NEAR(lr_at(s, 70), 0.055, 1e-15);
  EXPECT_EQ(lr_at(s, 90), 0.01);
  EXPECT_EQ(lr_at(s, 100), 0.01);
}

TEST(Cosine, ExactEndpoints) {
  const Schedule s = Schedule::cosine(0.1, 1e-5, 40);
  EXPECT_EQ(lr_at(s, 0), 0.1);
  EXPECT_NEAR(lr_at(s, 40), 1e-5, 1e-15);
  EXPECT_NEAR(lr_at(s, 20), 1e-5 + 0.5 * (0.1 - 1e-5), 1e-15);
}

TEST(Schedule, RetargetingKeepsShape) {
  const Schedule s = Schedule::one_cycle(0.001, 0.1, 1e-7, 0.1);
  const Schedule r = s.with_total_steps(200);
  EXPECT_EQ(r.total_steps, 200u);
  EXPECT_NEAR(lr_at(r, 20), 0.1, 1e-15);
  EXPECT_NEAR(lr_at(r, 200), 1e-7, 1e-15);
}

TEST(Schedule, ValidationErrors) {
  EXPECT_THROW(lr_at(Schedule::constant(0.1, 10), 11), ConfigError);
  EXPECT_THROW(Schedule::one_cycle(0.2, 0.1, 0.0, 0.3, 10).validate(), ConfigError);
  EXPECT_THROW(Schedule::step_decay(0.1, {0.5}, {}, 10).validate(), ConfigError);
  EXPECT_THROW(Schedule::step_decay(0.1, {0.6, 0.5}, {0.1, 0.1}, 10).validate(), ConfigError);
  EXPECT_THROW(Schedule::constant(-1.0, 10).validate(), ConfigError);
  EXPECT_THROW(parse_schedule_kind("triangular"), ConfigError);
  for (auto k : {ScheduleKind::kConstant, ScheduleKind::kStepDecay, ScheduleKind::kLinearDecay,
                 ScheduleKind::kOneCycle, ScheduleKind::kCosine}) {
    EXPECT_EQ(parse_schedule_kind(to_string(k)), k);
  }
}

}  // namespace
}  // namespace subnet

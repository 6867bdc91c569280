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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace subnet {

enum class ScheduleKind { kConstant, kStepDecay, kLinearDecay, kOneCycle, kCosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);

// Inverse momentum cycle that accompanies a one-cycle learning rate.
struct MomentumCycle {
  double max = 0.95;
  double min = 0.85;
};

// Learning-rate schedule indexed by optimizer step. Breakpoints are
// fractions of `total_steps`, so a schedule can be re-targeted to a
// different run length with `with_total_steps`.
//
//   constant      lr_init everywhere
//   step_decay    lr_init times the product of `factors[i]` for every
//                 breakpoint already passed (t >= breakpoints[i] * T)
//   linear_decay  lr_init until breakpoints[0], linear to lr_min at
//                 breakpoints[1], lr_min afterwards
//   one_cycle     cosine warm-up lr_init -> lr_max over warm_fraction * T,
//                 cosine cool-down lr_max -> lr_min over the remainder
//   cosine        cosine decay lr_init -> lr_min over T
struct Schedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double lr_init = 0.01;
  double lr_max = 0.01;
  double lr_min = 0.0;
  double warm_fraction = 0.1;
  std::size_t total_steps = 1;
  std::vector<double> breakpoints;
  std::vector<double> factors;
  std::optional<MomentumCycle> momentum;

  static Schedule constant(double lr, std::size_t total_steps = 1);
  static Schedule step_decay(double lr, std::vector<double> breakpoints,
                             std::vector<double> factors,
                             std::size_t total_steps = 1);
  static Schedule linear_decay(double lr_init, double lr_final,
                               double start_fraction, double end_fraction,
                               std::size_t total_steps = 1);
  static Schedule one_cycle(double lr_init, double lr_max, double lr_min,
                            double warm_fraction, std::size_t total_steps = 1);
  static Schedule cosine(double lr_init, double lr_min,
                         std::size_t total_steps = 1);

  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  Schedule with_total_steps(std::size_t steps) const;
};

// Learning rate at step t, 0 <= t <= total_steps.
double lr_at(const Schedule& schedule, std::size_t t);

// Momentum at step t following the mirrored cycle: max at 0, min at the end
// of the warm phase, max again at total_steps. Requires `momentum`.
double momentum_at(const Schedule& schedule, std::size_t t);

}  // namespace subnet

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

#include "subnet/schedules.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "subnet/errors.hpp"

namespace subnet {

namespace {

// Half-cosine ramp from 0 at phase 0 to 1 at phase 1.
double cosine_ramp(double phase) {
  return 0.5 * (1.0 - std::cos(std::numbers::pi * phase));
}

double warm_steps(const Schedule& s) {
  return s.warm_fraction * static_cast<double>(s.total_steps);
}

void check_step(const Schedule& s, std::size_t t) {
  if (t > s.total_steps) {
    throw ConfigError("schedule step " + std::to_string(t) +
                      " outside [0, " + std::to_string(s.total_steps) + "]");
  }
}

}  // namespace

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kStepDecay: return "step_decay";
    case ScheduleKind::kLinearDecay: return "linear_decay";
    case ScheduleKind::kOneCycle: return "one_cycle";
    case ScheduleKind::kCosine: return "cosine";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "step_decay") return ScheduleKind::kStepDecay;
  if (name == "linear_decay") return ScheduleKind::kLinearDecay;
  if (name == "one_cycle") return ScheduleKind::kOneCycle;
  if (name == "cosine") return ScheduleKind::kCosine;
  throw ConfigError("unknown schedule kind '" + name + "'");
}

Schedule Schedule::constant(double lr, std::size_t total_steps) {
  Schedule s;
  s.kind = ScheduleKind::kConstant;
  s.lr_init = s.lr_max = s.lr_min = lr;
  s.total_steps = total_steps;
  return s;
}

Schedule Schedule::step_decay(double lr, std::vector<double> breakpoints,
                              std::vector<double> factors,
                              std::size_t total_steps) {
  Schedule s = constant(lr, total_steps);
  s.kind = ScheduleKind::kStepDecay;
  s.breakpoints = std::move(breakpoints);
  s.factors = std::move(factors);
  return s;
}

Schedule Schedule::linear_decay(double lr_init, double lr_final,
                                double start_fraction, double end_fraction,
                                std::size_t total_steps) {
  Schedule s;
  s.kind = ScheduleKind::kLinearDecay;
  s.lr_init = s.lr_max = lr_init;
  s.lr_min = lr_final;
  s.breakpoints = {start_fraction, end_fraction};
  s.total_steps = total_steps;
  return s;
}

Schedule Schedule::one_cycle(double lr_init, double lr_max, double lr_min,
                             double warm_fraction, std::size_t total_steps) {
  Schedule s;
  s.kind = ScheduleKind::kOneCycle;
  s.lr_init = lr_init;
  s.lr_max = lr_max;
  s.lr_min = lr_min;
  s.warm_fraction = warm_fraction;
  s.total_steps = total_steps;
  return s;
}

Schedule Schedule::cosine(double lr_init, double lr_min,
                          std::size_t total_steps) {
  Schedule s;
  s.kind = ScheduleKind::kCosine;
  s.lr_init = s.lr_max = lr_init;
  s.lr_min = lr_min;
  s.total_steps = total_steps;
  return s;
}

void Schedule::validate() const {
  if (total_steps < 1) throw ConfigError("schedule total_steps must be >= 1");
  if (!(lr_init >= 0.0) || !std::isfinite(lr_init)) {
    throw ConfigError("schedule lr_init must be finite and non-negative");
  }
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0.0 && breakpoints[i] <= 1.0)) {
      throw ConfigError("schedule breakpoints must lie in (0, 1]");
    }
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) {
      throw ConfigError("schedule breakpoints must be strictly increasing");
    }
  }
  switch (kind) {
    case ScheduleKind::kConstant:
      break;
    case ScheduleKind::kStepDecay:
      if (factors.size() != breakpoints.size()) {
        throw ConfigError("step_decay needs one factor per breakpoint");
      }
      for (double f : factors) {
        if (!(f > 0.0)) throw ConfigError("step_decay factors must be > 0");
      }
      break;
    case ScheduleKind::kLinearDecay:
      if (breakpoints.size() != 2) {
        throw ConfigError("linear_decay needs exactly two breakpoints");
      }
      break;
    case ScheduleKind::kOneCycle:
      if (!(lr_min <= lr_init && lr_init <= lr_max)) {
        throw ConfigError("one_cycle requires lr_min <= lr_init <= lr_max");
      }
      [[fallthrough]];
    case ScheduleKind::kCosine:
      if (kind == ScheduleKind::kOneCycle &&
          !(warm_fraction > 0.0 && warm_fraction < 1.0)) {
        throw ConfigError("one_cycle warm_fraction must lie in (0, 1)");
      }
      if (lr_min < 0.0) throw ConfigError("schedule lr_min must be >= 0");
      break;
  }
  if (momentum) {
    if (!(momentum->min <= momentum->max && momentum->min >= 0.0 &&
          momentum->max < 1.0)) {
      throw ConfigError("momentum cycle requires 0 <= min <= max < 1");
    }
    if (!(warm_fraction > 0.0 && warm_fraction < 1.0)) {
      throw ConfigError("momentum cycle needs warm_fraction in (0, 1)");
    }
  }
}

Schedule Schedule::with_total_steps(std::size_t steps) const {
  Schedule s = *this;
  s.total_steps = steps;
  return s;
}

double lr_at(const Schedule& s, std::size_t t) {
  check_step(s, t);
  const double step = static_cast<double>(t);
  const double total = static_cast<double>(s.total_steps);
  switch (s.kind) {
    case ScheduleKind::kConstant:
      return s.lr_init;
    case ScheduleKind::kStepDecay: {
      double lr = s.lr_init;
      for (std::size_t i = 0; i < s.breakpoints.size(); ++i) {
        if (step >= s.breakpoints[i] * total) lr *= s.factors[i];
      }
      return lr;
    }
    case ScheduleKind::kLinearDecay: {
      const double start = s.breakpoints.at(0) * total;
      const double end = s.breakpoints.at(1) * total;
      if (step <= start) return s.lr_init;
      if (step >= end) return s.lr_min;
      return s.lr_init + (s.lr_min - s.lr_init) * (step - start) / (end - start);
    }
    case ScheduleKind::kOneCycle: {
      const double warm = warm_steps(s);
      if (step <= warm) {
        return s.lr_init + (s.lr_max - s.lr_init) * cosine_ramp(step / warm);
      }
      const double cool = total - warm;
      return s.lr_min +
             (s.lr_max - s.lr_min) * (1.0 - cosine_ramp((step - warm) / cool));
    }
    case ScheduleKind::kCosine:
      return s.lr_min + (s.lr_init - s.lr_min) * (1.0 - cosine_ramp(step / total));
  }
  return s.lr_init;
}

double momentum_at(const Schedule& s, std::size_t t) {
  if (!s.momentum) throw ConfigError("schedule has no momentum cycle");
  check_step(s, t);
  const double step = static_cast<double>(t);
  const double warm = warm_steps(s);
  const double span = s.momentum->max - s.momentum->min;
  if (step <= warm) return s.momentum->max - span * cosine_ramp(step / warm);
  const double cool = static_cast<double>(s.total_steps) - warm;
  return s.momentum->min + span * cosine_ramp((step - warm) / cool);
}

}  // namespace subnet

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

#include <cstdint>
#include <random>
#include <string_view>

namespace subnet {

// Well-known stream tags. Every random consumer in the library draws from a
// stream derived from (master seed, tag, index) so that parallel work is
// reproducible independent of scheduling.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kMask = 3,
  kNoise = 4,
  kRealize = 5,
  kMember = 6,
  kData = 7,
  kSplit = 8,
  kProbe = 9,
  kDirection = 10,
  kTune = 11,
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                          std::uint64_t index = 0);

// Platform-stable random source. The std:: distributions are
// implementation-defined, so uniform and normal variates are produced here
// directly from the 64-bit Mersenne Twister output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform integer on [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace subnet

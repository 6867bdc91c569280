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

// Probabilistic subnetwork masks and their annealing toward a deterministic
// target subnetwork during tuning.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "subnet/dataset.hpp"
#include "subnet/mask.hpp"
#include "subnet/masking.hpp"
#include "subnet/nn.hpp"
#include "subnet/perturb.hpp"
#include "subnet/rng.hpp"

namespace subnet {

enum class ProbInit { kRandomUniform, kTemperature, kGaussianMixture };
enum class AnnealKind { kLinear, kCosine, kExponential };
// reverse_dropout: target weights always on, others on with probability tau.
// symmetric: target weights on with 1 - tau, others with tau.
enum class TemperatureVariant { kReverseDropout, kSymmetric };

std::string to_string(ProbInit v);
std::string to_string(AnnealKind v);
std::string to_string(TemperatureVariant v);
ProbInit parse_prob_init(const std::string& name);
AnnealKind parse_anneal_kind(const std::string& name);
TemperatureVariant parse_temperature_variant(const std::string& name);

// Per-weight retention probabilities plus the target they anneal toward.
struct ProbMask {
  std::vector<Matrix> initial;  // entries in [0, 1]
  NetMask target;
  ProbInit init = ProbInit::kTemperature;
  double tau_init = 0.0;
  AnnealKind anneal = AnnealKind::kLinear;
  std::size_t anneal_epochs = 0;
  double exp_k = 5.0;

  void validate() const;
};

// P ~ U(0, 1) i.i.d.; target bit = 1 iff P > sparsity.
ProbMask init_random(double sparsity, const NetShape& shape, std::uint64_t seed);

ProbMask init_temperature(const NetMask& target, double tau,
                          TemperatureVariant variant);

// The opposed matrix 1 - P, with target bit = 1 iff 1 - P > sparsity.
ProbMask opposed(const ProbMask& pm, double sparsity);

// P ~ N(mu1, sigma1^2) where index = 0 and N(mu2, sigma2^2) where index = 1,
// clamped to [0, 1]. The index doubles as the target.
ProbMask init_gaussian_mixture(const NetMask& index, double mu1, double sigma1,
                               double mu2, double sigma2, std::uint64_t seed);

// Fraction of the initial distance to the target remaining at `phase` in
// [0, 1]: linear 1 - t, cosine (1 + cos(pi t)) / 2, exponential exp(-k t).
double anneal_decay(AnnealKind kind, double phase, double exp_k);

// Probabilities for `epoch`: b + (p0 - b) * decay(epoch / anneal_epochs),
// exactly p0 at epoch 0 and exactly b from anneal_epochs on.
std::vector<Matrix> anneal_at(const ProbMask& pm, std::size_t epoch);

// Independent Bernoulli draw per entry.
NetMask realize(const std::vector<Matrix>& probs, Rng& rng);
NetMask realize(const std::vector<Matrix>& probs, std::uint64_t seed);

struct AnnealTuneResult {
  ChildNetwork child;
  TrainResult training;
};

// Tunes a copy of `parent` with a fresh Bernoulli realization of the
// annealed probabilities on every batch (applied transiently; stored weights
// are never zeroed mid-run), then applies the target mask with freezing.
// `realize_seed` drives the per-batch realizations.
AnnealTuneResult anneal_tune(const DenseNet& parent, const ProbMask& pm,
                             const Dataset& data, const TrainConfig& tune,
                             std::uint64_t realize_seed,
                             const Dataset* validation = nullptr,
                             Granularity granularity = Granularity::kUnstructured);

}  // namespace subnet

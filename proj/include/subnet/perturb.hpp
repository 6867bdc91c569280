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

// Child-network generation: Gaussian noise mutation of a subnetwork
// (plain and mirrored), one-shot pruning with frozen zeros, magnitude
// masks, and iterative prune-and-tune.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subnet/dataset.hpp"
#include "subnet/mask.hpp"
#include "subnet/masking.hpp"
#include "subnet/nn.hpp"

namespace subnet {

struct NoiseSpec {
  double mean = 0.0;
  double sigma = 0.0;  // standard deviation
  std::uint64_t seed = 0;

  void validate() const;
};

struct Lineage {
  std::uint64_t parent_id = 0;
  std::string method;
  std::size_t generation = 1;
  std::size_t index = 0;
  std::uint64_t seed = 0;
};

struct ChildNetwork {
  DenseNet net;
  NetMask retained;
  std::optional<FreezeSet> freeze;
  Lineage lineage;
};

// Fingerprint of a network's parameters, used as lineage parent id.
std::uint64_t network_id(const DenseNet& net);

// One N(mean, sigma^2) matrix per layer, drawn from `noise.seed`.
std::vector<Matrix> sample_noise(const NetShape& shape, const NoiseSpec& noise);

// W + (N o M) with N drawn from `noise`. Entries where M = 0 are
// bit-identical to the parent.
ChildNetwork mutate(const DenseNet& parent, const NetMask& mask,
                    const NoiseSpec& noise);

// Same with an explicit noise tensor.
ChildNetwork mutate_with(const DenseNet& parent, const NetMask& mask,
                         const std::vector<Matrix>& noise);

// The four children W + N o M, W + N o (1-M), W - N o M, W - N o (1-M)
// sharing one N and one M. Each opposed pair is built as an exact
// reflection about the parent weight: the child moving away from zero is
// rounded once and its partner is 2w minus that value, so the pair sums to
// 2w exactly whenever the reflection is representable.
std::array<ChildNetwork, 4> mirrored_quad(const DenseNet& parent,
                                          const NetMask& mask,
                                          const NoiseSpec& noise);

// Freeze set for a retained mask. Structured masks also freeze the bias of
// every fully removed neuron.
FreezeSet make_freeze(const NetMask& retained,
                      Granularity granularity = Granularity::kUnstructured);

// W o M with the removed weights frozen at zero.
ChildNetwork prune(const DenseNet& parent, const NetMask& retained,
                   Granularity granularity = Granularity::kUnstructured);

// Retained mask removing exactly floor(sparsity * n) smallest-|w| weights,
// per layer or over the whole network. Ties go to the lower
// (layer, row, col) index.
NetMask magnitude_mask(const DenseNet& parent, double sparsity, Scope scope);

// Train hooks that hold a FreezeSet fixed.
class FreezeHooks : public TrainHooks {
 public:
  explicit FreezeHooks(const FreezeSet* frozen) : frozen_(frozen) {}
  const FreezeSet* freeze() const override { return frozen_; }

 private:
  const FreezeSet* frozen_;
};

// Trains a child in place, honouring its freeze set.
TrainResult tune(ChildNetwork& child, const Dataset& data,
                 const TrainConfig& config, const Dataset* validation = nullptr);

enum class PruneCriterion { kRandom, kMagnitude };

std::string to_string(PruneCriterion c);
PruneCriterion parse_prune_criterion(const std::string& name);

// Cumulative number of removed weights after each of `pruning_epochs`
// epochs for a target of floor(final_sparsity * n). Equal increments; the
// remainder goes to the earliest epochs.
std::vector<std::size_t> iterative_prune_counts(std::size_t n,
                                                double final_sparsity,
                                                std::size_t pruning_epochs);

struct IterativePruneConfig {
  double final_sparsity = 0.9;
  std::size_t pruning_epochs = 1;
  PruneCriterion criterion = PruneCriterion::kMagnitude;
  Scope scope = Scope::kLayerwise;
  std::uint64_t seed = 0;
  TrainConfig tune;

  void validate() const;
};

struct IterativePruneResult {
  ChildNetwork child;
  // Retained mask in effect after the pruning step of each pruning epoch.
  std::vector<NetMask> retained_per_epoch;
  TrainResult training;
};

// At the start of each of the first `pruning_epochs` epochs removes the next
// increment of weights among those still retained (randomly or by current
// magnitude) and freezes them; tuning continues for tune.epochs in total.
// Removed sets are nested across epochs.
IterativePruneResult iterative_prune_tune(const DenseNet& parent,
                                          const Dataset& data,
                                          const IterativePruneConfig& config);

}  // namespace subnet

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

// Prediction combination, classification metrics, candidate selection,
// trust-region search, and the three ensemble pipelines (noisy, sparse,
// stochastic).

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "subnet/dataset.hpp"
#include "subnet/masking.hpp"
#include "subnet/nn.hpp"
#include "subnet/perturb.hpp"
#include "subnet/stochastic.hpp"

namespace subnet {

inline constexpr std::size_t kDefaultEceBins = 15;

struct PredictionSet {
  Matrix probs;  // N x C, rows sum to 1
  std::vector<int> labels;

  // Throws ShapeError / ConfigError on malformed sets.
  void validate() const;
};

// Elementwise mean of member probabilities. Each entry is rounded once from
// the exact mean, so the result does not depend on member order.
Matrix combine_mean(std::span<const Matrix> members);

// Per-sample mode of member argmaxes; ties go to the lowest class.
std::vector<int> combine_vote(std::span<const Matrix> members);

double accuracy(const PredictionSet& ps);
double accuracy(std::span<const int> predicted, std::span<const int> labels);
double nll(const PredictionSet& ps, double floor = kLogFloor);

// Expected calibration error with `bins` equal-width, right-inclusive bins
// over [0, 1]; bin 0 also holds confidence 0.
double ece(const PredictionSet& ps, std::size_t bins = kDefaultEceBins);

// Mean over samples of sum_c ref log(ref / pert), both floored.
double mean_kl(const Matrix& reference, const Matrix& perturbed,
               double floor = kLogFloor);

// Mean over samples of the summed squared class differences.
double mean_output_mse(const Matrix& reference, const Matrix& perturbed);

// Indices of the k highest fitness values, best first; ties by index.
std::vector<std::size_t> select_top_k(std::span<const double> fitness,
                                      std::size_t k);

struct Metrics {
  double accuracy = 0.0;
  double nll = 0.0;
  double ece = 0.0;
};

Metrics evaluate(const PredictionSet& ps, std::size_t bins = kDefaultEceBins);

struct TrustRegionSpec {
  std::vector<double> sigmas;      // ascending
  std::vector<double> sparsities;  // ascending
  double kl_target = 0.05;
  double noise_mean = 0.0;
  std::size_t samples_per_cell = 4;
  Scope scope = Scope::kLayerwise;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrustRegionCell {
  double sigma = 0.0;
  double sparsity = 0.0;
  double mean_kl = 0.0;
  double mean_accuracy = 0.0;
};

struct TrustRegionResult {
  TrustRegionCell best;
  // False when no cell met the KL target; `best` is then the lowest-KL cell.
  bool within_target = true;
  std::vector<TrustRegionCell> grid;  // sigma-major
};

// Evaluates every (sigma, sparsity) cell with samples_per_cell mutated
// children on `probe` and returns the most accurate cell whose mean KL to the
// parent is within the target. Sample s of every cell uses the same seeds.
TrustRegionResult trust_region_search(const DenseNet& parent,
                                      const Dataset& probe,
                                      const TrustRegionSpec& spec);

enum class Combination { kMean, kVote };

std::string to_string(Combination c);
Combination parse_combination(const std::string& name);

// How sparse and stochastic runs choose member masks: independent random
// samples, or neural partitioning into disjoint groups.
enum class MaskMode { kRandom, kPartition };

std::string to_string(MaskMode m);
MaskMode parse_mask_mode(const std::string& name);

struct EnsembleRecord {
  std::vector<ChildNetwork> members;
  DenseNet parent;
  Combination combination = Combination::kMean;
  bool include_parent = false;
};

// Test-set probabilities of each member, parent first when included.
std::vector<Matrix> member_probabilities(const EnsembleRecord& record,
                                         const Matrix& inputs);

// Mean combination gives all three metrics from the averaged
// probabilities. Vote combination takes accuracy from the vote and NLL/ECE
// from the averaged probabilities.
Metrics evaluate(const EnsembleRecord& record, const Dataset& test);

struct MemberReport {
  Lineage lineage;
  double fitness = 0.0;  // validation accuracy
  Metrics test;
};

struct EnsembleResult {
  EnsembleRecord record;
  Metrics ensemble;
  Metrics parent;
  std::vector<MemberReport> members;
  std::vector<double> candidate_fitness;  // every generated candidate
  std::vector<std::size_t> selected;      // candidate indices kept
};

struct NoisyConfig {
  std::size_t population = 16;
  std::size_t k = 8;
  double sparsity = 0.5;
  Granularity granularity = Granularity::kUnstructured;
  Scope scope = Scope::kLayerwise;
  double noise_mean = 0.0;
  double sigma = 0.1;
  bool mirrored = false;  // population built from quads sharing N and M
  Combination combination = Combination::kMean;
  bool include_parent = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SparseConfig {
  std::size_t members = 8;
  double sparsity = 0.5;
  Granularity granularity = Granularity::kUnstructured;
  Scope scope = Scope::kLayerwise;
  // Partition mode groups members into k-way partitions with
  // k = 1 / (1 - sparsity), which must be an integer >= 2.
  MaskMode mode = MaskMode::kRandom;
  TrainConfig tune;
  Combination combination = Combination::kMean;
  bool include_parent = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StochasticConfig {
  std::size_t members = 8;
  double sparsity = 0.5;
  Granularity granularity = Granularity::kUnstructured;
  Scope scope = Scope::kLayerwise;
  MaskMode mode = MaskMode::kRandom;
  ProbInit init = ProbInit::kTemperature;
  double tau = 0.5;
  TemperatureVariant variant = TemperatureVariant::kReverseDropout;
  double mix_mu1 = 0.25;
  double mix_sigma1 = 0.15;
  double mix_mu2 = 0.75;
  double mix_sigma2 = 0.15;
  AnnealKind anneal = AnnealKind::kLinear;
  std::size_t anneal_epochs = 5;
  double exp_k = 5.0;
  TrainConfig tune;
  Combination combination = Combination::kMean;
  bool include_parent = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Partition group size implied by a sparsity, or 0 if 1 / (1 - sparsity) is
// not an integer >= 2.
std::size_t partition_group_size(double sparsity);

// Target masks shared by sparse and stochastic runs with the same seed.
std::vector<NetMask> member_masks(const NetShape& shape, std::size_t members,
                                  double sparsity, Granularity granularity,
                                  Scope scope, MaskMode mode,
                                  std::uint64_t seed);

// Noise-mutate a population, keep the k most accurate on validation.
EnsembleResult run_noisy(const DenseNet& parent, const DataSplits& data,
                         const NoisyConfig& config);

// Prune-and-tune children.
EnsembleResult run_sparse(const DenseNet& parent, const DataSplits& data,
                          const SparseConfig& config);

// Anneal-tune children from probabilistic masks.
EnsembleResult run_stochastic(const DenseNet& parent, const DataSplits& data,
                              const StochasticConfig& config);

}  // namespace subnet

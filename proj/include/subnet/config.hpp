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

// Experiment configuration: a flat, versioned `key = value` file. Unknown
// keys, malformed values and cross-field inconsistencies are all reported
// together before any compute starts.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "subnet/ensemble.hpp"
#include "subnet/masking.hpp"
#include "subnet/nn.hpp"
#include "subnet/stochastic.hpp"

namespace subnet {

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind {
  kDecisionBoundary,
  kKlAblation,
  kSparsityAblation,
  kStructureAblation,
  kEnsembleSize,
  kAnnealAblation,
  kScheduleCompare,
  kDiversityReport,
  kHashCorpus,
  kLandscape,
};

inline constexpr std::array<ExperimentKind, 10> kAllKinds = {
    ExperimentKind::kDecisionBoundary, ExperimentKind::kKlAblation,
    ExperimentKind::kSparsityAblation, ExperimentKind::kStructureAblation,
    ExperimentKind::kEnsembleSize,     ExperimentKind::kAnnealAblation,
    ExperimentKind::kScheduleCompare,  ExperimentKind::kDiversityReport,
    ExperimentKind::kHashCorpus,       ExperimentKind::kLandscape};

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& name);

struct DatasetSpec {
  std::string source = "spiral";  // spiral | blobs | csv
  std::size_t n = 4000;
  double noise = 0.05;
  double turns = 3.5;
  std::size_t classes = 3;
  double separation = 3.0;
  double sd = 1.0;
  std::string path;
  std::array<double, 3> split{0.625, 0.125, 0.25};
};

struct ModelSpec {
  std::vector<std::size_t> hidden{64, 64, 64};
  Activation activation = Activation::kRelu;
};

// Parent training: Adam at 0.001, 10 epochs, batches of 32.
TrainConfig default_train_config();
// Child tuning: Adam under a one-cycle schedule (0.002 -> 0.02 -> 2e-6,
// 30% warm-up), 3 epochs.
TrainConfig default_tune_config();

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ExperimentKind kind = ExperimentKind::kDecisionBoundary;
  DatasetSpec data;
  ModelSpec model;
  TrainConfig train = default_train_config();
  TrainConfig tune = default_tune_config();
  std::vector<std::uint64_t> seeds{0};

  // Perturbation grids.
  std::vector<double> sigmas;
  std::vector<double> sparsities;
  double noise_mean = 0.0;
  std::size_t children = 4;
  Scope scope = Scope::kLayerwise;
  std::vector<Granularity> granularities{Granularity::kUnstructured};

  // Ensembles.
  std::size_t members = 8;
  std::vector<std::size_t> sizes;
  std::vector<MaskMode> modes{MaskMode::kPartition};
  Combination combination = Combination::kMean;
  std::optional<bool> include_parent;
  std::size_t population = 16;
  std::size_t k = 8;
  bool mirrored = false;

  // Annealing.
  std::vector<ProbInit> inits{ProbInit::kTemperature};
  std::vector<AnnealKind> anneals{AnnealKind::kLinear};
  double tau = 0.5;
  TemperatureVariant variant = TemperatureVariant::kReverseDropout;
  std::size_t anneal_epochs = 5;
  double exp_k = 5.0;
  double mix_mu1 = 0.25;
  double mix_sigma1 = 0.15;
  double mix_mu2 = 0.75;
  double mix_sigma2 = 0.15;
  bool baselines = true;  // magnitude and iterative pruning rows
  std::size_t pruning_epochs = 5;

  // schedule_compare: tuning schedules to compare, e.g. constant, one_cycle.
  std::vector<ScheduleKind> tune_schedules{ScheduleKind::kConstant,
                                           ScheduleKind::kOneCycle};

  // Trust region.
  double kl_target = 0.05;
  std::size_t samples_per_cell = 4;

  std::size_t grid_resolution = 200;
  std::size_t ece_bins = kDefaultEceBins;

  // hash_corpus.
  std::string dir_a;
  std::string dir_b;

  // landscape.
  double span = 1.0;
  std::size_t resolution = 21;
};

// Thrown with every problem found in a config file.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Parses and validates. Throws ValidationError listing all problems.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "config");
// Relative dataset and corpus paths resolve against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

// Problems found, or an empty list. Never throws on content errors.
std::vector<std::string> validate_config_text(const std::string& text,
                                              const std::string& origin = "config");

// Seeds as "0, 3, 5-9".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Canonical `key = value` rendering of every key, used for hashing.
std::string canonical_text(const ExperimentConfig& config);

}  // namespace subnet

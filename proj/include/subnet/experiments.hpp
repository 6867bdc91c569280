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

// Config-driven experiment runner. Each seed is an independent unit of work;
// seeds fan out over a worker pool and a single collector writes the
// artifacts in seed order, so output does not depend on the worker count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "subnet/config.hpp"
#include "subnet/dataset.hpp"
#include "subnet/nn.hpp"

namespace subnet {

using ParamValue = std::variant<std::int64_t, double, std::string>;

// One results.jsonl line: a trained model, member, ensemble or derived
// measurement.
struct ResultRecord {
  std::string kind;
  std::uint64_t seed = 0;
  std::string role;   // parent, child, member, ensemble, ...
  std::string group;  // cell label, e.g. "sigma=0.1,sparsity=0.5"
  std::int64_t index = -1;
  std::vector<std::pair<std::string, ParamValue>> params;
  std::vector<std::pair<std::string, double>> metrics;  // NaN allowed

  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

std::string to_json_line(const ResultRecord& record);
ResultRecord parse_json_line(const std::string& line);

struct TableRow {
  std::string role;
  std::string group;
  std::string metric;
  std::size_t n = 0;  // finite values only
  double mean = 0.0;
  double se = 0.0;    // sample sd / sqrt(n); 0 when n < 2
};

// Means and standard errors per (role, group, metric), in order of first
// appearance.
std::vector<TableRow> aggregate(const std::vector<ResultRecord>& records);
std::string tables_csv(const std::vector<TableRow>& rows);

// Data and trained parent for one seed.
struct SeedContext {
  DataSplits data;
  DenseNet parent;
};

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed);
SeedContext prepare_seed(const ExperimentConfig& config, std::uint64_t seed);

// Class map of `net` over [-1.5, 1.5]^2 as a binary PGM (row 0 at y = 1.5).
std::vector<std::uint8_t> boundary_pgm(const DenseNet& net, std::size_t resolution);

std::string config_hash(const ExperimentConfig& config);

struct RunOptions {
  std::optional<std::vector<std::uint64_t>> seeds;  // overrides the config
  std::size_t workers = 1;
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

struct RunSummary {
  std::size_t records = 0;
  std::vector<std::string> files;
};

// Writes results.jsonl, tables.csv, manifest.json and kind-specific files
// into `out`. Everything goes to a sibling temp directory first and is
// renamed into place on success. An existing `out` is replaced only if it
// holds a previous run (a manifest.json).
RunSummary run_experiment(const ExperimentConfig& config,
                          const std::filesystem::path& out,
                          const RunOptions& options = {});

}  // namespace subnet

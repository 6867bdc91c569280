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

// Synthetic datasets, stratified splitting, CSV interchange, and the binary
// model file format.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "subnet/dataset.hpp"
#include "subnet/mask.hpp"
#include "subnet/nn.hpp"

namespace subnet {

inline constexpr double kSpiralNoise = 0.05;
inline constexpr double kSpiralTurns = 3.5;

// Two interleaved arms: r = t, angle = t * turns * pi + label * pi, with t
// evenly spaced on [0.1, 1] within each class, plus N(0, noise_sd^2) on
// each coordinate. Rows are shuffled.
Dataset spiral(std::size_t n, double noise_sd = kSpiralNoise,
               double turns = kSpiralTurns, std::uint64_t seed = 0);

// k isotropic Gaussian clusters (standard deviation `sd`) centred on a
// circle of radius `separation`. Balanced to within one point.
Dataset gaussian_blobs(std::size_t k, std::size_t n, double separation,
                       std::uint64_t seed = 0, double sd = 1.0);

// Stratified (train, validation, test) split. Fractions are >= 0 and sum to
// 1; every class count and every split size is within one of proportional.
// Throws ConfigError if a positive fraction leaves a split empty.
DataSplits split(const Dataset& data, std::array<double, 3> fractions,
                 std::uint64_t seed);

// Header row, one column per feature, label column last.
Dataset read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Dataset& data);

inline constexpr std::uint16_t kModelFormatVersion = 1;

struct LoadedModel {
  DenseNet net;
  std::optional<NetMask> mask;
};

std::vector<std::uint8_t> encode_model(const DenseNet& net,
                                       const NetMask* mask = nullptr);
// Throws FormatError on bad magic, version, truncation or checksum.
LoadedModel decode_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const DenseNet& net,
                const NetMask* mask = nullptr);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace subnet

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
#include <span>
#include <vector>

#include "subnet/matrix.hpp"

namespace subnet {

// Labelled classification data: one input row per sample.
struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return inputs.cols(); }

  // Throws ConfigError on label/row disagreements.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

struct DataSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

}  // namespace subnet

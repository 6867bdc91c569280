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

// Subnetwork mask sampling, neural partitioning, mask application, and
// mask-space distances.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "subnet/mask.hpp"
#include "subnet/nn.hpp"

namespace subnet {

// unstructured: individual weights. structured: whole output-neuron rows.
enum class Granularity { kUnstructured, kStructured };
// layerwise: each layer sampled independently. global: one exact-count draw
// over every weight of the network.
enum class Scope { kLayerwise, kGlobal };

std::string to_string(Granularity g);
std::string to_string(Scope s);
Granularity parse_granularity(const std::string& name);
Scope parse_scope(const std::string& name);

struct SamplerSpec {
  // Fraction of weights removed. The Bernoulli retention probability is
  // 1 - sparsity.
  double sparsity = 0.5;
  Granularity granularity = Granularity::kUnstructured;
  Scope scope = Scope::kLayerwise;
  std::uint64_t seed = 0;

  double density() const { return 1.0 - sparsity; }
  void validate() const;
};

// Random subnetwork mask. Unstructured layerwise bits are i.i.d.
// Bernoulli(density); structured layerwise keeps each row wholesale with
// probability density; global scope keeps exactly round(density * total)
// weights chosen uniformly. Structured + global throws ConfigError.
NetMask sample_mask(const SamplerSpec& spec, const NetShape& shape);

// Bitwise complement.
NetMask anti_mask(const NetMask& mask);

// k pairwise-disjoint masks whose elementwise sum is all-ones. Each weight
// is assigned to one partition uniformly at random; k == 2 yields
// (m, anti_mask(m)).
std::vector<NetMask> partition(std::size_t k, const NetShape& shape,
                               std::uint64_t seed);

// Weights multiplied elementwise by the mask bits. Biases are untouched for
// unstructured masks; with structured granularity the bias of every fully
// masked row is zeroed too.
DenseNet apply_mask(const DenseNet& net, const NetMask& mask,
                    Granularity granularity = Granularity::kUnstructured);

std::size_t hamming_distance(const NetMask& a, const NetMask& b);

// sqrt of the number of disagreeing bits.
double cartesian_distance(const NetMask& a, const NetMask& b);

// Sum of cartesian_distance over all ordered pairs (i, j), i != j.
double total_distance(const std::vector<NetMask>& masks);

}  // namespace subnet

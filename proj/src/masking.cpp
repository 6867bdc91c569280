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

#include "subnet/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subnet/errors.hpp"
#include "subnet/rng.hpp"

namespace subnet {

std::size_t total_size(const NetShape& shape) {
  std::size_t n = 0;
  for (const auto& s : shape) n += s.size();
  return n;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

NetMask NetMask::filled(const NetShape& shape, std::uint8_t value) {
  NetMask m;
  for (const auto& s : shape) m.layers.emplace_back(s.rows, s.cols, value);
  return m;
}

NetShape NetMask::shape() const {
  NetShape s;
  for (const auto& l : layers) s.push_back(l.shape());
  return s;
}

std::size_t NetMask::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.bits.size();
  return n;
}

std::size_t NetMask::count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.count();
  return n;
}

double NetMask::density() const {
  const std::size_t n = size();
  return n == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(n);
}

void check_shape(const NetMask& mask, const NetShape& shape) {
  if (mask.layers.size() != shape.size()) {
    throw ShapeError("mask has " + std::to_string(mask.layers.size()) +
                     " layers, expected " + std::to_string(shape.size()));
  }
  for (std::size_t l = 0; l < shape.size(); ++l) {
    const Mask& m = mask.layers[l];
    if (m.rows != shape[l].rows || m.cols != shape[l].cols ||
        m.bits.size() != shape[l].size()) {
      throw ShapeError("mask shape mismatch at layer " + std::to_string(l));
    }
  }
}

std::string to_string(Granularity g) {
  return g == Granularity::kStructured ? "structured" : "unstructured";
}

std::string to_string(Scope s) {
  return s == Scope::kGlobal ? "global" : "layerwise";
}

Granularity parse_granularity(const std::string& name) {
  if (name == "unstructured") return Granularity::kUnstructured;
  if (name == "structured") return Granularity::kStructured;
  throw ConfigError("unknown granularity '" + name + "'");
}

Scope parse_scope(const std::string& name) {
  if (name == "layerwise") return Scope::kLayerwise;
  if (name == "global") return Scope::kGlobal;
  throw ConfigError("unknown scope '" + name + "'");
}

void SamplerSpec::validate() const {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1]");
  }
  if (granularity == Granularity::kStructured && scope == Scope::kGlobal) {
    throw ConfigError("structured granularity with global scope is unsupported");
  }
}

NetMask sample_mask(const SamplerSpec& spec, const NetShape& shape) {
  spec.validate();
  const double density = spec.density();
  NetMask mask = NetMask::filled(shape, 0);
  Rng rng(derive_seed(spec.seed, Stream::kMask));

  if (spec.scope == Scope::kGlobal) {
    const std::size_t total = total_size(shape);
    const auto keep = static_cast<std::size_t>(
        std::llround(density * static_cast<double>(total)));
    std::vector<std::size_t> index(total);
    std::iota(index.begin(), index.end(), std::size_t{0});
    for (std::size_t i = 0; i < keep; ++i) {
      std::swap(index[i], index[i + rng.below(total - i)]);
    }
    // Flat index -> (layer, offset).
    std::vector<std::size_t> offsets;
    std::size_t acc = 0;
    for (const auto& s : shape) {
      offsets.push_back(acc);
      acc += s.size();
    }
    for (std::size_t i = 0; i < keep; ++i) {
      const std::size_t flat = index[i];
      const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
      const std::size_t layer = static_cast<std::size_t>(it - offsets.begin()) - 1;
      mask.layers[layer].bits[flat - offsets[layer]] = 1;
    }
    return mask;
  }

  for (auto& layer : mask.layers) {
    if (spec.granularity == Granularity::kStructured) {
      for (std::size_t r = 0; r < layer.rows; ++r) {
        const std::uint8_t keep = rng.bernoulli(density) ? 1 : 0;
        std::fill_n(layer.bits.begin() + static_cast<std::ptrdiff_t>(r * layer.cols),
                    layer.cols, keep);
      }
    } else {
      for (auto& bit : layer.bits) bit = rng.bernoulli(density) ? 1 : 0;
    }
  }
  return mask;
}

NetMask anti_mask(const NetMask& mask) {
  NetMask out = mask;
  for (auto& layer : out.layers) {
    for (auto& bit : layer.bits) bit = bit ? 0 : 1;
  }
  return out;
}

std::vector<NetMask> partition(std::size_t k, const NetShape& shape,
                               std::uint64_t seed) {
  if (k < 2) throw ConfigError("partition requires k >= 2");
  std::vector<NetMask> parts(k, NetMask::filled(shape, 0));
  Rng rng(derive_seed(seed, Stream::kMask));
  for (std::size_t l = 0; l < shape.size(); ++l) {
    for (std::size_t i = 0; i < shape[l].size(); ++i) {
      parts[rng.below(k)].layers[l].bits[i] = 1;
    }
  }
  return parts;
}

DenseNet apply_mask(const DenseNet& net, const NetMask& mask,
                    Granularity granularity) {
  check_shape(mask, net.shape());
  DenseNet out = net;
  for (std::size_t l = 0; l < out.depth(); ++l) {
    DenseLayer& layer = out.layer(l);
    const Mask& m = mask.layers[l];
    auto& w = layer.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!m.bits[i]) w[i] = 0.0;
    }
    if (granularity == Granularity::kStructured) {
      for (std::size_t r = 0; r < m.rows; ++r) {
        const auto row_begin = m.bits.begin() + static_cast<std::ptrdiff_t>(r * m.cols);
        if (std::none_of(row_begin, row_begin + static_cast<std::ptrdiff_t>(m.cols),
                         [](std::uint8_t b) { return b != 0; })) {
          layer.bias[r] = 0.0;
        }
      }
    }
  }
  return out;
}

std::size_t hamming_distance(const NetMask& a, const NetMask& b) {
  check_shape(b, a.shape());
  std::size_t d = 0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& x = a.layers[l].bits;
    const auto& y = b.layers[l].bits;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] != y[i]) ? 1 : 0;
  }
  return d;
}

double cartesian_distance(const NetMask& a, const NetMask& b) {
  return std::sqrt(static_cast<double>(hamming_distance(a, b)));
}

double total_distance(const std::vector<NetMask>& masks) {
  if (masks.size() < 2) throw ConfigError("total_distance needs >= 2 masks");
  double total = 0.0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (std::size_t j = 0; j < masks.size(); ++j) {
      if (i != j) total += cartesian_distance(masks[i], masks[j]);
    }
  }
  return total;
}

}  // namespace subnet

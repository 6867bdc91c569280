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
#include <cstdint>
#include <vector>

namespace subnet {

// (rows, cols) of one weight matrix.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

using NetShape = std::vector<LayerShape>;

std::size_t total_size(const NetShape& shape);

// Binary matrix aligned one-to-one with a layer's weight matrix.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(std::size_t r, std::size_t c, std::uint8_t fill = 0)
      : rows(r), cols(c), bits(r * c, fill) {}

  std::uint8_t operator()(std::size_t r, std::size_t c) const {
    return bits[r * cols + c];
  }
  std::uint8_t& operator()(std::size_t r, std::size_t c) {
    return bits[r * cols + c];
  }
  LayerShape shape() const { return {rows, cols}; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

// One Mask per layer of a network.
struct NetMask {
  std::vector<Mask> layers;

  static NetMask filled(const NetShape& shape, std::uint8_t value);

  NetShape shape() const;
  std::size_t size() const;
  std::size_t count() const;
  double density() const;

  friend bool operator==(const NetMask&, const NetMask&) = default;
};

// Parameters held fixed during training. A weight is frozen where
// `trainable` has a zero bit; `trainable_bias` is either empty (all biases
// train) or holds one flag per output unit of every layer.
struct FreezeSet {
  NetMask trainable;
  std::vector<std::vector<std::uint8_t>> trainable_bias;

  bool bias_trainable(std::size_t layer, std::size_t unit) const {
    return trainable_bias.empty() || trainable_bias[layer][unit] != 0;
  }
  std::size_t frozen_weight_count() const {
    return trainable.size() - trainable.count();
  }

  friend bool operator==(const FreezeSet&, const FreezeSet&) = default;
};

// Throws ShapeError when the mask does not mirror `shape`.
void check_shape(const NetMask& mask, const NetShape& shape);

}  // namespace subnet

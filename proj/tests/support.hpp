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

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "subnet/config.hpp"
#include "subnet/dataset.hpp"
#include "subnet/experiments.hpp"
#include "subnet/matrix.hpp"
#include "subnet/nn.hpp"
#include "subnet/rng.hpp"

namespace subnet::testing {

// Built net with random (non-zero) biases.
inline DenseNet random_net(std::vector<std::size_t> dims, Activation hidden,
                           std::uint64_t seed) {
  DenseNet net = DenseNet::build(dims, hidden, seed);
  Rng rng(seed ^ 0x5eedULL);
  for (auto& layer : net.layers()) {
    for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  }
  return net;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

// Row-stochastic matrix with strictly positive entries.
inline Matrix random_probs(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = rng.uniform(0.01, 1.0);
      total += m(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) /= total;
  }
  return m;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.below(classes));
  return y;
}

inline Dataset random_dataset(std::size_t n, std::size_t dim, std::size_t classes,
                              std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.inputs = random_matrix(n, dim, rng);
  d.labels = random_labels(n, classes, rng);
  d.class_count = classes;
  return d;
}

// The spiral task with the default parent recipe.
inline SeedContext spiral_context(std::uint64_t seed) {
  ExperimentConfig config;
  return prepare_seed(config, seed);
}

// Central finite differences of the mean cross-entropy with respect to every
// parameter.
inline Gradient fd_gradient(const DenseNet& net, const Matrix& batch,
                            const std::vector<int>& labels, double h = 1e-6) {
  Gradient g = Gradient::zeros_like(net);
  DenseNet probe = net;
  auto loss = [&] { return cross_entropy(predict_proba(probe, batch), labels); };
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto& w = probe.layer(l).weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double keep = w[i];
      w[i] = keep + h;
      const double up = loss();
      w[i] = keep - h;
      const double down = loss();
      w[i] = keep;
      g.weights[l].data()[i] = (up - down) / (2.0 * h);
    }
    auto& b = probe.layer(l).bias;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double keep = b[i];
      b[i] = keep + h;
      const double up = loss();
      b[i] = keep - h;
      const double down = loss();
      b[i] = keep;
      g.bias[l][i] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// Largest |a - b| / max(|a|, |b|, floor) over all entries. Entries below
// `floor` in magnitude are compared absolutely against it.
inline double max_rel_error(const Gradient& a, const Gradient& b, double floor = 1e-5) {
  double worst = 0.0;
  auto visit = [&](double x, double y) {
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
  };
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    for (std::size_t i = 0; i < a.weights[l].size(); ++i) {
      visit(a.weights[l].data()[i], b.weights[l].data()[i]);
    }
    for (std::size_t i = 0; i < a.bias[l].size(); ++i) visit(a.bias[l][i], b.bias[l][i]);
  }
  return worst;
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-8) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor});
}

}  // namespace subnet::testing

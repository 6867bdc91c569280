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

// Output-space diversity between ensemble members and gradient-based
// probes of single networks (saliency, feature visualization, loss
// landscape slices).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "subnet/dataset.hpp"
#include "subnet/matrix.hpp"
#include "subnet/nn.hpp"

namespace subnet {

struct Correlation {
  double value = 0.0;  // NaN when every class was excluded
  std::vector<std::size_t> excluded_classes;
};

// Pearson correlation of each class column across samples, averaged over
// the classes where both columns vary.
Correlation pairwise_correlation_detail(const Matrix& a, const Matrix& b);
double pairwise_correlation(const Matrix& a, const Matrix& b);

// Fraction of samples whose argmax differs.
double prediction_disagreement(const Matrix& a, const Matrix& b);

struct DiversityReport {
  Matrix correlation;  // symmetric, unit diagonal
  Matrix kl;           // kl(i, j) = mean_kl(member i, member j)
  Matrix pdr;          // symmetric, zero diagonal
  // Means and standard errors over unordered pairs (ordered for KL).
  double mean_correlation = 0.0;
  double se_correlation = 0.0;
  double mean_kl = 0.0;
  double se_kl = 0.0;
  double mean_pdr = 0.0;
  double se_pdr = 0.0;
  // Pairs (i < j) where some class had zero variance and was skipped.
  std::vector<std::pair<std::size_t, std::size_t>> flagged;
};

DiversityReport diversity_report(std::span<const Matrix> members);

// Gradient of logit `cls` (default: the predicted class) with respect to x.
std::vector<double> saliency(const DenseNet& net, std::span<const double> x,
                             std::optional<std::size_t> cls = std::nullopt);

// Mean saliency over n inputs x + N(0, sigma^2 I). The class is fixed from
// the clean input. sigma = 0 returns saliency(x) exactly.
std::vector<double> smoothgrad(const DenseNet& net, std::span<const double> x,
                               double sigma, std::size_t n, std::uint64_t seed,
                               std::optional<std::size_t> cls = std::nullopt);

struct FeatureVisualization {
  std::vector<double> input;
  std::vector<double> trace;  // pre-activation at init and after every step
};

// Normalized gradient ascent on a unit's pre-activation, projected onto the
// L2 ball of radius l2_bound after every step.
FeatureVisualization feature_visualization(const DenseNet& net,
                                           std::size_t layer, std::size_t unit,
                                           std::size_t steps, double step_size,
                                           double l2_bound, std::uint64_t seed);

// Two directions in parameter space, Gaussian, orthogonalized and scaled
// per layer to the norm of that layer's weights. Bias components are zero.
std::pair<Gradient, Gradient> random_directions(const DenseNet& net,
                                                std::uint64_t seed);

using LossFn = std::function<double(const DenseNet&)>;

// losses(i, j) = loss(theta + alphas[i] delta + betas[j] eta).
Matrix landscape_slice(const DenseNet& net, const LossFn& loss,
                       const Gradient& delta, const Gradient& eta,
                       std::span<const double> alphas,
                       std::span<const double> betas);

// Same with the mean cross-entropy on `data`.
Matrix landscape_slice(const DenseNet& net, const Dataset& data,
                       const Gradient& delta, const Gradient& eta,
                       std::span<const double> alphas,
                       std::span<const double> betas);

}  // namespace subnet

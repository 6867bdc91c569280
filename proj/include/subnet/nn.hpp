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

// Dense feed-forward networks with manual backpropagation. This is the
// substrate every ensemble method perturbs, tunes, and evaluates.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subnet/dataset.hpp"
#include "subnet/mask.hpp"
#include "subnet/matrix.hpp"
#include "subnet/schedules.hpp"

namespace subnet {

// Floor applied to probabilities before taking logarithms.
inline constexpr double kLogFloor = 1e-12;

enum class Activation { kRelu, kTanh, kIdentity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  // Fully connected net with `dims` = {input, hidden..., output}. Hidden
  // layers use `hidden`; the output layer is linear (raw logits). Weights are
  // uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static DenseNet build(std::span<const std::size_t> dims, Activation hidden,
                        std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }
  std::size_t depth() const { return layers_.size(); }

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  NetShape shape() const;
  std::size_t weight_count() const;

  // Throws ShapeError if layer dimensions do not chain.
  void validate() const;

  friend bool operator==(const DenseNet&, const DenseNet&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Parameter-shaped tensors; used for gradients, optimizer buffers, and
// weight-space directions.
struct Gradient {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static Gradient zeros_like(const DenseNet& net);
  bool all_finite() const;
  double squared_norm() const;

  friend bool operator==(const Gradient&, const Gradient&) = default;
};

// Raw pre-softmax logits for every row of `batch`. When `mask` is given the
// network runs with weights W o mask without modifying `net`.
Matrix forward(const DenseNet& net, const Matrix& batch,
               const NetMask* mask = nullptr);

// Numerically stable softmax (max subtracted before exponentiation).
std::vector<double> softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);

// Convenience: softmax(forward(net, batch)).
Matrix predict_proba(const DenseNet& net, const Matrix& batch);

// Mean of -log p(true class), with probabilities floored at `floor`.
double cross_entropy(const Matrix& probs, std::span<const int> labels,
                     double floor = kLogFloor);

struct LossAndGradient {
  double loss = 0.0;
  Gradient grad;
  Matrix logits;
};

// Mean cross-entropy of softmax(forward(net, batch)) and its gradient with
// respect to every parameter. With a transient `mask` the gradient is taken
// with respect to the unmasked weights of W o mask, so masked entries
// receive exactly zero.
LossAndGradient backward(const DenseNet& net, const Matrix& batch,
                         std::span<const int> labels,
                         const NetMask* mask = nullptr);

// Pre-activation of unit `unit` in layer `layer` for input `x`.
double unit_preactivation(const DenseNet& net, std::span<const double> x,
                          std::size_t layer, std::size_t unit);

// Gradient of unit_preactivation with respect to the input vector.
std::vector<double> unit_input_gradient(const DenseNet& net,
                                        std::span<const double> x,
                                        std::size_t layer, std::size_t unit);

enum class OptimizerKind { kSgd, kNesterov, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 0.001;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Optimizer hyperparameters plus per-parameter auxiliary buffers.
//   sgd       w <- w - lr g
//   nesterov  v <- mu v - lr g ; w <- w + mu v - lr g
//   adam      bias-corrected first and second moments
class OptimizerState {
 public:
  OptimizerState(OptimizerConfig config, const DenseNet& net);

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }

  // Zeroes auxiliary buffers of every frozen parameter.
  void clear_frozen(const FreezeSet& frozen);

 private:
  friend void optimizer_step(OptimizerState&, DenseNet&, const Gradient&,
                             std::optional<double>, std::optional<double>,
                             const FreezeSet*);

  OptimizerConfig config_;
  std::uint64_t step_count_ = 0;
  Gradient first_;   // velocity (nesterov) or first moment (adam)
  Gradient second_;  // second moment (adam)
};

// Applies one update. Parameters frozen by `frozen` are skipped entirely, so
// they and their buffers never change. Throws
// NumericError on a non-finite gradient and ShapeError on mismatched shapes.
void optimizer_step(OptimizerState& state, DenseNet& net, const Gradient& grad,
                    std::optional<double> lr_override = std::nullopt,
                    std::optional<double> momentum_override = std::nullopt,
                    const FreezeSet* frozen = nullptr);

struct TrainConfig {
  OptimizerConfig optimizer;
  // Overrides optimizer.learning_rate per step when present; re-targeted to
  // epochs * batches_per_epoch steps by train().
  std::optional<Schedule> schedule;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-batch and per-epoch extension points of train(). Used for freezing
// pruned parameters, transient stochastic masks, and iterative pruning.
class TrainHooks {
 public:
  virtual ~TrainHooks() = default;

  // Called before the first batch of every epoch. May edit the network and
  // optimizer buffers (e.g. to prune further).
  virtual void on_epoch_begin(std::size_t /*epoch*/, DenseNet& /*net*/,
                              OptimizerState& /*opt*/) {}

  // Transient forward mask for this batch, or nullptr.
  virtual const NetMask* batch_mask(std::size_t /*epoch*/,
                                    std::size_t /*batch*/) {
    return nullptr;
  }

  // Parameters to hold fixed, or nullptr.
  virtual const FreezeSet* freeze() const { return nullptr; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
};

struct TrainResult {
  DenseNet net;
  std::vector<EpochRecord> history;
};

// Minibatch training with cross-entropy loss. Deterministic given
// config.seed: epoch e shuffles with a permutation derived from
// (seed, e); the last short batch is kept.
TrainResult train(DenseNet net, const Dataset& data, const TrainConfig& config,
                  TrainHooks* hooks = nullptr,
                  const Dataset* validation = nullptr);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy_of(const Matrix& scores, std::span<const int> labels);

std::size_t argmax(std::span<const double> values);

}  // namespace subnet

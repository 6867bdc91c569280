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

#include "subnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subnet/errors.hpp"
#include "subnet/rng.hpp"

namespace subnet {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output y.
double activate_derivative(Activation a, double z, double y) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

// W o mask; masked entries become +0.0 regardless of the weight's sign.
Matrix masked_weights(const Matrix& w, const Mask& m) {
  Matrix out(w.rows(), w.cols());
  auto& dst = out.data();
  const auto& src = w.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = m.bits[i] ? src[i] : 0.0;
  return out;
}

// Effective weights for every layer: either references into the net or
// masked copies.
class EffectiveWeights {
 public:
  EffectiveWeights(const DenseNet& net, const NetMask* mask) {
    if (mask) {
      check_shape(*mask, net.shape());
      owned_.reserve(net.depth());
      for (std::size_t l = 0; l < net.depth(); ++l) {
        owned_.push_back(masked_weights(net.layer(l).weights, mask->layers[l]));
      }
      for (const auto& m : owned_) refs_.push_back(&m);
    } else {
      for (const auto& layer : net.layers()) refs_.push_back(&layer.weights);
    }
  }
  const Matrix& operator[](std::size_t l) const { return *refs_[l]; }

 private:
  std::vector<Matrix> owned_;
  std::vector<const Matrix*> refs_;
};

// z = x W^T + b for a batch of rows.
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  const std::size_t n = x.rows();
  const std::size_t out = w.rows();
  const std::size_t in = w.cols();
  Matrix z(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.data().data() + r * in;
    double* zr = z.data().data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data().data() + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      zr[o] = acc;
    }
  }
  return z;
}

void check_input(const DenseNet& net, const Matrix& batch) {
  if (net.depth() == 0) throw ShapeError("network has no layers");
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " columns, network expects " +
                     std::to_string(net.input_dim()));
  }
}

void check_labels(std::span<const int> labels, std::size_t rows,
                  std::size_t classes) {
  if (labels.size() != rows) throw ShapeError("label count != batch rows");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ShapeError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
}

// Backpropagates `delta` (gradient w.r.t. pre-activations of `layer`) down
// to the input vector of a single sample. `pre` and `post` hold the cached
// per-layer pre-activations and outputs for that sample.
std::vector<double> backprop_to_input(const DenseNet& net, std::size_t layer,
                                      std::vector<double> delta,
                                      const std::vector<std::vector<double>>& pre,
                                      const std::vector<std::vector<double>>& post) {
  for (std::size_t l = layer + 1; l-- > 0;) {
    const Matrix& w = net.layer(l).weights;
    std::vector<double> below(w.cols(), 0.0);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const auto row = w.row(o);
      for (std::size_t i = 0; i < w.cols(); ++i) below[i] += d * row[i];
    }
    if (l > 0) {
      const Activation a = net.layer(l - 1).activation;
      for (std::size_t i = 0; i < below.size(); ++i) {
        below[i] *= activate_derivative(a, pre[l - 1][i], post[l - 1][i]);
      }
    }
    delta = std::move(below);
  }
  return delta;
}

void forward_single(const DenseNet& net, std::span<const double> x,
                    std::size_t last_layer,
                    std::vector<std::vector<double>>& pre,
                    std::vector<std::vector<double>>& post) {
  if (x.size() != net.input_dim()) throw ShapeError("input length mismatch");
  if (last_layer >= net.depth()) throw ShapeError("layer index out of range");
  pre.assign(last_layer + 1, {});
  post.assign(last_layer + 1, {});
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l <= last_layer; ++l) {
    const DenseLayer& layer = net.layer(l);
    std::vector<double> z(layer.weights.rows());
    for (std::size_t o = 0; o < z.size(); ++o) {
      const auto row = layer.weights.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < row.size(); ++i) acc += a[i] * row[i];
      z[o] = acc;
    }
    std::vector<double> y(z.size());
    for (std::size_t o = 0; o < z.size(); ++o) y[o] = activate(layer.activation, z[o]);
    pre[l] = z;
    post[l] = y;
    a = std::move(y);
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  validate();
}

DenseNet DenseNet::build(std::span<const std::size_t> dims, Activation hidden,
                         std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("network needs at least two dims");
  Rng rng(derive_seed(seed, Stream::kInit));
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    if (in == 0 || out == 0) throw ConfigError("layer widths must be positive");
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weights.data()) w = rng.uniform(-limit, limit);
    layer.bias.assign(out, 0.0);
    layer.activation = (l + 2 == dims.size()) ? Activation::kIdentity : hidden;
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

std::size_t DenseNet::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().weights.cols();
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().weights.rows();
}

NetShape DenseNet::shape() const {
  NetShape s;
  s.reserve(layers_.size());
  for (const auto& l : layers_) s.push_back({l.weights.rows(), l.weights.cols()});
  return s;
}

std::size_t DenseNet::weight_count() const { return total_size(shape()); }

void DenseNet::validate() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weights.rows()) {
      throw ShapeError("layer " + std::to_string(l) +
                       ": bias length != weight rows");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw ShapeError("layer " + std::to_string(l) +
                       ": input width does not match previous layer");
    }
  }
}

Gradient Gradient::zeros_like(const DenseNet& net) {
  Gradient g;
  for (const auto& layer : net.layers()) {
    g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

bool Gradient::all_finite() const {
  for (const auto& w : weights) {
    if (!w.all_finite()) return false;
  }
  for (const auto& b : bias) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double Gradient::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) {
    for (double v : w.data()) s += v * v;
  }
  for (const auto& b : bias) {
    for (double v : b) s += v * v;
  }
  return s;
}

Matrix forward(const DenseNet& net, const Matrix& batch, const NetMask* mask) {
  check_input(net, batch);
  const EffectiveWeights weights(net, mask);
  Matrix a = batch;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const DenseLayer& layer = net.layer(l);
    Matrix z = affine(a, weights[l], layer.bias);
    if (layer.activation != Activation::kIdentity) {
      for (double& v : z.data()) v = activate(layer.activation, v);
    }
    a = std::move(z);
  }
  return a;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

Matrix predict_proba(const DenseNet& net, const Matrix& batch) {
  return softmax_rows(forward(net, batch));
}

double cross_entropy(const Matrix& probs, std::span<const int> labels,
                     double floor) {
  check_labels(labels, probs.rows(), probs.cols());
  if (probs.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    total -= std::log(std::max(probs(r, static_cast<std::size_t>(labels[r])), floor));
  }
  return total / static_cast<double>(probs.rows());
}

LossAndGradient backward(const DenseNet& net, const Matrix& batch,
                         std::span<const int> labels, const NetMask* mask) {
  check_input(net, batch);
  check_labels(labels, batch.rows(), net.output_dim());
  const EffectiveWeights weights(net, mask);
  const std::size_t depth = net.depth();
  const std::size_t n = batch.rows();

  // Cached layer inputs (acts[l] feeds layer l) and pre-activations.
  std::vector<Matrix> acts;
  std::vector<Matrix> pres;
  acts.reserve(depth + 1);
  pres.reserve(depth);
  acts.push_back(batch);
  for (std::size_t l = 0; l < depth; ++l) {
    const DenseLayer& layer = net.layer(l);
    Matrix z = affine(acts.back(), weights[l], layer.bias);
    Matrix y = z;
    if (layer.activation != Activation::kIdentity) {
      for (double& v : y.data()) v = activate(layer.activation, v);
    }
    pres.push_back(std::move(z));
    acts.push_back(std::move(y));
  }

  LossAndGradient result;
  result.logits = acts.back();
  const Matrix probs = softmax_rows(result.logits);
  result.loss = cross_entropy(probs, labels);

  // dL/dz at the output: (p - onehot) / n.
  Matrix delta = probs;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    delta(r, static_cast<std::size_t>(labels[r])) -= 1.0;
  }
  for (double& v : delta.data()) v *= inv_n;

  result.grad = Gradient::zeros_like(net);
  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& input = acts[l];
    const Matrix& w = weights[l];
    const std::size_t out = w.rows();
    const std::size_t in = w.cols();
    Matrix& gw = result.grad.weights[l];
    std::vector<double>& gb = result.grad.bias[l];
    for (std::size_t r = 0; r < n; ++r) {
      const double* dr = delta.data().data() + r * out;
      const double* xr = input.data().data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dr[o];
        gb[o] += d;
        if (d == 0.0) continue;
        double* go = gw.data().data() + o * in;
        for (std::size_t i = 0; i < in; ++i) go[i] += d * xr[i];
      }
    }
    if (mask) {
      const auto& bits = mask->layers[l].bits;
      auto& g = gw.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!bits[i]) g[i] = 0.0;
      }
    }
    if (l == 0) break;
    Matrix below(n, in);
    const Activation a = net.layer(l - 1).activation;
    for (std::size_t r = 0; r < n; ++r) {
      const double* dr = delta.data().data() + r * out;
      double* br = below.data().data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        const double* wo = w.data().data() + o * in;
        for (std::size_t i = 0; i < in; ++i) br[i] += d * wo[i];
      }
      const double* zr = pres[l - 1].data().data() + r * in;
      const double* yr = acts[l].data().data() + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        br[i] *= activate_derivative(a, zr[i], yr[i]);
      }
    }
    delta = std::move(below);
  }
  return result;
}

double unit_preactivation(const DenseNet& net, std::span<const double> x,
                          std::size_t layer, std::size_t unit) {
  std::vector<std::vector<double>> pre, post;
  forward_single(net, x, layer, pre, post);
  if (unit >= pre[layer].size()) throw ShapeError("unit index out of range");
  return pre[layer][unit];
}

std::vector<double> unit_input_gradient(const DenseNet& net,
                                        std::span<const double> x,
                                        std::size_t layer, std::size_t unit) {
  std::vector<std::vector<double>> pre, post;
  forward_single(net, x, layer, pre, post);
  if (unit >= pre[layer].size()) throw ShapeError("unit index out of range");
  std::vector<double> seed(pre[layer].size(), 0.0);
  seed[unit] = 1.0;
  return backprop_to_input(net, layer, std::move(seed), pre, post);
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kNesterov: return "nesterov";
    case OptimizerKind::kAdam: return "adam";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "nesterov") return OptimizerKind::kNesterov;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in (0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam eps must be > 0");
}

OptimizerState::OptimizerState(OptimizerConfig config, const DenseNet& net)
    : config_(config) {
  config_.validate();
  if (config_.kind != OptimizerKind::kSgd) first_ = Gradient::zeros_like(net);
  if (config_.kind == OptimizerKind::kAdam) second_ = Gradient::zeros_like(net);
}

void OptimizerState::clear_frozen(const FreezeSet& frozen) {
  for (Gradient* buf : {&first_, &second_}) {
    if (buf->weights.empty()) continue;
    for (std::size_t l = 0; l < buf->weights.size(); ++l) {
      auto& w = buf->weights[l].data();
      const auto& bits = frozen.trainable.layers.at(l).bits;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!bits[i]) w[i] = 0.0;
      }
      for (std::size_t o = 0; o < buf->bias[l].size(); ++o) {
        if (!frozen.bias_trainable(l, o)) buf->bias[l][o] = 0.0;
      }
    }
  }
}

void optimizer_step(OptimizerState& state, DenseNet& net, const Gradient& grad,
                    std::optional<double> lr_override,
                    std::optional<double> momentum_override,
                    const FreezeSet* frozen) {
  if (grad.weights.size() != net.depth() || grad.bias.size() != net.depth()) {
    throw ShapeError("gradient depth does not match network");
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!grad.weights[l].same_shape(net.layer(l).weights) ||
        grad.bias[l].size() != net.layer(l).bias.size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  if (frozen) check_shape(frozen->trainable, net.shape());
  if (!grad.all_finite()) {
    throw NumericError("optimizer_step rejected a non-finite gradient");
  }

  const OptimizerConfig& cfg = state.config_;
  const double lr = lr_override.value_or(cfg.learning_rate);
  const double mu = momentum_override.value_or(cfg.momentum);
  ++state.step_count_;
  const double t = static_cast<double>(state.step_count_);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](double& w, double g, double& m, double& v) {
    switch (cfg.kind) {
      case OptimizerKind::kSgd:
        w -= lr * g;
        break;
      case OptimizerKind::kNesterov:
        m = mu * m - lr * g;
        w += mu * m - lr * g;
        break;
      case OptimizerKind::kAdam: {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        w -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        break;
      }
    }
  };

  double unused_m = 0.0;
  double unused_v = 0.0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    DenseLayer& layer = net.layer(l);
    auto& w = layer.weights.data();
    const auto& g = grad.weights[l].data();
    const std::uint8_t* bits =
        frozen ? frozen->trainable.layers[l].bits.data() : nullptr;
    double* m = state.first_.weights.empty() ? nullptr
                                             : state.first_.weights[l].data().data();
    double* v = state.second_.weights.empty()
                    ? nullptr
                    : state.second_.weights[l].data().data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (bits && !bits[i]) continue;
      update(w[i], g[i], m ? m[i] : unused_m, v ? v[i] : unused_v);
    }
    double* mb = state.first_.bias.empty() ? nullptr : state.first_.bias[l].data();
    double* vb = state.second_.bias.empty() ? nullptr : state.second_.bias[l].data();
    for (std::size_t o = 0; o < layer.bias.size(); ++o) {
      if (frozen && !frozen->bias_trainable(l, o)) continue;
      update(layer.bias[o], grad.bias[l][o], mb ? mb[o] : unused_m,
             vb ? vb[o] : unused_v);
    }
  }
}

void TrainConfig::validate() const {
  optimizer.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (schedule) schedule->with_total_steps(1).validate();
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double accuracy_of(const Matrix& scores, std::span<const int> labels) {
  if (labels.size() != scores.rows()) throw ShapeError("label count != rows");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    if (argmax(scores.row(r)) == static_cast<std::size_t>(labels[r])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

TrainResult train(DenseNet net, const Dataset& data, const TrainConfig& config,
                  TrainHooks* hooks, const Dataset* validation) {
  config.validate();
  if (data.size() == 0) throw ConfigError("training dataset is empty");
  if (data.input_dim() != net.input_dim()) {
    throw ShapeError("dataset input width does not match network");
  }
  const std::size_t n = data.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = std::max<std::size_t>(1, config.epochs * batches);
  std::optional<Schedule> schedule;
  if (config.schedule) schedule = config.schedule->with_total_steps(total_steps);

  OptimizerState opt(config.optimizer, net);
  TrainResult result;
  std::size_t step = 0;
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (hooks) hooks->on_epoch_begin(epoch, net, opt);

    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, Stream::kShuffle, epoch));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n, begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Matrix xb = select_rows(data.inputs, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = data.labels[idx[i]];

      const NetMask* mask = hooks ? hooks->batch_mask(epoch, b) : nullptr;
      LossAndGradient lg = backward(net, xb, yb, mask);
      std::optional<double> lr;
      std::optional<double> mu;
      if (schedule) {
        lr = lr_at(*schedule, step);
        if (schedule->momentum) mu = momentum_at(*schedule, step);
      }
      optimizer_step(opt, net, lg.grad, lr, mu, hooks ? hooks->freeze() : nullptr);

      loss_sum += lg.loss * static_cast<double>(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (argmax(lg.logits.row(r)) == static_cast<std::size_t>(yb[r])) ++correct;
      }
      ++step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(n);
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    if (validation && validation->size() > 0) {
      const Matrix probs = predict_proba(net, validation->inputs);
      record.val_loss = cross_entropy(probs, validation->labels);
      record.val_accuracy = accuracy_of(probs, validation->labels);
    }
    result.history.push_back(record);
  }
  result.net = std::move(net);
  return result;
}

}  // namespace subnet

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

#include "subnet/perturb.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "subnet/errors.hpp"
#include "subnet/rng.hpp"

namespace subnet {

namespace {

// floor(fraction * n), tolerant of representation error in `fraction`
// (0.9 * 1000 must give 900).
std::size_t fraction_count(double fraction, std::size_t n) {
  const double exact = fraction * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::floor(exact + 1e-9)));
}

// Returns (w + n, w - n) as an exact reflection about w where representable.
std::pair<double, double> reflected_pair(double w, double n) {
  if (w == 0.0) return {n, -n};
  const bool same_sign = std::signbit(w) == std::signbit(n);
  const double step = same_sign ? n : -n;
  const double outward = w + step;
  const double inward = 2.0 * w - outward;
  return same_sign ? std::pair{outward, inward} : std::pair{inward, outward};
}

void check_child_shapes(const DenseNet& parent, const NetMask& mask) {
  check_shape(mask, parent.shape());
}

// Flat (layer, offset) candidate list of currently retained weights.
struct FlatIndex {
  std::size_t layer;
  std::size_t offset;
};

std::vector<FlatIndex> retained_indices(const NetMask& mask,
                                        std::optional<std::size_t> only_layer) {
  std::vector<FlatIndex> out;
  for (std::size_t l = 0; l < mask.layers.size(); ++l) {
    if (only_layer && *only_layer != l) continue;
    const auto& bits = mask.layers[l].bits;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) out.push_back({l, i});
    }
  }
  return out;
}

// Chooses `count` entries of `candidates` to remove, smallest magnitude
// first (ties by index) or uniformly at random.
std::vector<FlatIndex> choose_removals(std::vector<FlatIndex> candidates,
                                       std::size_t count, PruneCriterion criterion,
                                       const DenseNet& net, Rng& rng) {
  count = std::min(count, candidates.size());
  if (criterion == PruneCriterion::kMagnitude) {
    auto magnitude = [&](const FlatIndex& f) {
      return std::abs(net.layer(f.layer).weights.data()[f.offset]);
    };
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const FlatIndex& a, const FlatIndex& b) {
                       return magnitude(a) < magnitude(b);
                     });
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
    }
  }
  candidates.resize(count);
  return candidates;
}

class IterativePruneHooks : public TrainHooks {
 public:
  IterativePruneHooks(const DenseNet& parent, const IterativePruneConfig& config)
      : config_(config) {
    const NetShape shape = parent.shape();
    freeze_.trainable = NetMask::filled(shape, 1);
    if (config.scope == Scope::kGlobal) {
      cumulative_.push_back(iterative_prune_counts(total_size(shape),
                                                   config.final_sparsity,
                                                   config.pruning_epochs));
    } else {
      for (const auto& s : shape) {
        cumulative_.push_back(iterative_prune_counts(
            s.size(), config.final_sparsity, config.pruning_epochs));
      }
    }
  }

  void on_epoch_begin(std::size_t epoch, DenseNet& net,
                      OptimizerState& opt) override {
    if (epoch >= config_.pruning_epochs) return;
    Rng rng(derive_seed(config_.seed, Stream::kMask, epoch));
    std::vector<FlatIndex> removals;
    for (std::size_t g = 0; g < cumulative_.size(); ++g) {
      const std::size_t target = cumulative_[g][epoch];
      const std::size_t already = epoch == 0 ? 0 : cumulative_[g][epoch - 1];
      const std::optional<std::size_t> layer =
          config_.scope == Scope::kGlobal ? std::nullopt : std::optional{g};
      auto chosen = choose_removals(retained_indices(freeze_.trainable, layer),
                                    target - already, config_.criterion, net, rng);
      removals.insert(removals.end(), chosen.begin(), chosen.end());
    }
    for (const auto& f : removals) {
      freeze_.trainable.layers[f.layer].bits[f.offset] = 0;
      net.layer(f.layer).weights.data()[f.offset] = 0.0;
    }
    opt.clear_frozen(freeze_);
    snapshots_.push_back(freeze_.trainable);
  }

  const FreezeSet* freeze() const override { return &freeze_; }

  const FreezeSet& freeze_set() const { return freeze_; }
  std::vector<NetMask>& snapshots() { return snapshots_; }

 private:
  const IterativePruneConfig& config_;
  std::vector<std::vector<std::size_t>> cumulative_;
  FreezeSet freeze_;
  std::vector<NetMask> snapshots_;
};

}  // namespace

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("noise sigma must be finite and >= 0");
  }
  if (!std::isfinite(mean)) throw ConfigError("noise mean must be finite");
}

std::uint64_t network_id(const DenseNet& net) {
  std::uint64_t h = mix64(net.depth());
  for (const auto& layer : net.layers()) {
    for (double w : layer.weights.data()) h = mix64(h ^ std::bit_cast<std::uint64_t>(w));
    for (double b : layer.bias) h = mix64(h ^ std::bit_cast<std::uint64_t>(b));
  }
  return h;
}

std::vector<Matrix> sample_noise(const NetShape& shape, const NoiseSpec& noise) {
  noise.validate();
  Rng rng(derive_seed(noise.seed, Stream::kNoise));
  std::vector<Matrix> out;
  out.reserve(shape.size());
  for (const auto& s : shape) {
    Matrix m(s.rows, s.cols);
    for (double& v : m.data()) v = rng.normal(noise.mean, noise.sigma);
    out.push_back(std::move(m));
  }
  return out;
}

ChildNetwork mutate_with(const DenseNet& parent, const NetMask& mask,
                         const std::vector<Matrix>& noise) {
  check_child_shapes(parent, mask);
  if (noise.size() != parent.depth()) throw ShapeError("noise depth mismatch");
  ChildNetwork child;
  child.net = parent;
  child.retained = mask;
  child.lineage.parent_id = network_id(parent);
  child.lineage.method = "mutate";
  for (std::size_t l = 0; l < parent.depth(); ++l) {
    auto& w = child.net.layer(l).weights.data();
    if (!noise[l].same_shape(parent.layer(l).weights)) {
      throw ShapeError("noise shape mismatch at layer " + std::to_string(l));
    }
    const auto& n = noise[l].data();
    const auto& bits = mask.layers[l].bits;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (bits[i]) w[i] += n[i];
    }
  }
  return child;
}

ChildNetwork mutate(const DenseNet& parent, const NetMask& mask,
                    const NoiseSpec& noise) {
  ChildNetwork child = mutate_with(parent, mask, sample_noise(parent.shape(), noise));
  child.lineage.seed = noise.seed;
  return child;
}

std::array<ChildNetwork, 4> mirrored_quad(const DenseNet& parent,
                                          const NetMask& mask,
                                          const NoiseSpec& noise) {
  check_child_shapes(parent, mask);
  const std::vector<Matrix> n = sample_noise(parent.shape(), noise);
  const NetMask inverse = anti_mask(mask);
  std::array<ChildNetwork, 4> children;
  const std::array<const NetMask*, 4> subspace = {&mask, &inverse, &mask, &inverse};
  for (std::size_t c = 0; c < 4; ++c) {
    children[c].net = parent;
    children[c].retained = *subspace[c];
    children[c].lineage = {network_id(parent), "mirrored", 1, c, noise.seed};
  }
  for (std::size_t l = 0; l < parent.depth(); ++l) {
    const auto& w = parent.layer(l).weights.data();
    const auto& bits = mask.layers[l].bits;
    const auto& nl = n[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto [plus, minus] = reflected_pair(w[i], nl[i]);
      // Children 0/2 perturb the mask subspace, 1/3 its complement.
      const std::size_t up = bits[i] ? 0 : 1;
      children[up].net.layer(l).weights.data()[i] = plus;
      children[up + 2].net.layer(l).weights.data()[i] = minus;
    }
  }
  return children;
}

FreezeSet make_freeze(const NetMask& retained, Granularity granularity) {
  FreezeSet f;
  f.trainable = retained;
  if (granularity == Granularity::kStructured) {
    for (const auto& m : retained.layers) {
      std::vector<std::uint8_t> rows(m.rows, 0);
      for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
          if (m(r, c)) {
            rows[r] = 1;
            break;
          }
        }
      }
      f.trainable_bias.push_back(std::move(rows));
    }
  }
  return f;
}

ChildNetwork prune(const DenseNet& parent, const NetMask& retained,
                   Granularity granularity) {
  ChildNetwork child;
  child.net = apply_mask(parent, retained, granularity);
  child.retained = retained;
  child.freeze = make_freeze(retained, granularity);
  child.lineage.parent_id = network_id(parent);
  child.lineage.method = "prune";
  return child;
}

NetMask magnitude_mask(const DenseNet& parent, double sparsity, Scope scope) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1]");
  }
  NetMask mask = NetMask::filled(parent.shape(), 1);
  Rng unused(0);
  if (scope == Scope::kGlobal) {
    auto removals = choose_removals(retained_indices(mask, std::nullopt),
                                    fraction_count(sparsity, mask.size()),
                                    PruneCriterion::kMagnitude, parent, unused);
    for (const auto& f : removals) mask.layers[f.layer].bits[f.offset] = 0;
    return mask;
  }
  for (std::size_t l = 0; l < mask.layers.size(); ++l) {
    auto removals = choose_removals(retained_indices(mask, l),
                                    fraction_count(sparsity, mask.layers[l].bits.size()),
                                    PruneCriterion::kMagnitude, parent, unused);
    for (const auto& f : removals) mask.layers[f.layer].bits[f.offset] = 0;
  }
  return mask;
}

TrainResult tune(ChildNetwork& child, const Dataset& data,
                 const TrainConfig& config, const Dataset* validation) {
  FreezeHooks hooks(child.freeze ? &*child.freeze : nullptr);
  TrainResult result = train(child.net, data, config, &hooks, validation);
  child.net = result.net;
  return result;
}

std::string to_string(PruneCriterion c) {
  return c == PruneCriterion::kRandom ? "random" : "magnitude";
}

PruneCriterion parse_prune_criterion(const std::string& name) {
  if (name == "random") return PruneCriterion::kRandom;
  if (name == "magnitude") return PruneCriterion::kMagnitude;
  throw ConfigError("unknown prune criterion '" + name + "'");
}

std::vector<std::size_t> iterative_prune_counts(std::size_t n,
                                                double final_sparsity,
                                                std::size_t pruning_epochs) {
  if (pruning_epochs == 0) throw ConfigError("pruning_epochs must be >= 1");
  const std::size_t target = fraction_count(final_sparsity, n);
  const std::size_t base = target / pruning_epochs;
  const std::size_t extra = target % pruning_epochs;
  std::vector<std::size_t> cumulative(pruning_epochs);
  std::size_t total = 0;
  for (std::size_t e = 0; e < pruning_epochs; ++e) {
    total += base + (e < extra ? 1 : 0);
    cumulative[e] = total;
  }
  return cumulative;
}

void IterativePruneConfig::validate() const {
  if (!(final_sparsity >= 0.0 && final_sparsity < 1.0)) {
    throw ConfigError("final_sparsity must lie in [0, 1)");
  }
  if (pruning_epochs == 0) throw ConfigError("pruning_epochs must be >= 1");
  if (pruning_epochs > tune.epochs) {
    throw ConfigError("pruning_epochs exceeds total tuning epochs");
  }
  tune.validate();
}

IterativePruneResult iterative_prune_tune(const DenseNet& parent,
                                          const Dataset& data,
                                          const IterativePruneConfig& config) {
  config.validate();
  IterativePruneHooks hooks(parent, config);
  IterativePruneResult result;
  result.training = train(parent, data, config.tune, &hooks);
  result.child.net = result.training.net;
  result.child.retained = hooks.freeze_set().trainable;
  result.child.freeze = hooks.freeze_set();
  result.child.lineage = {network_id(parent), "iterative_prune", 1, 0, config.seed};
  result.retained_per_epoch = std::move(hooks.snapshots());
  return result;
}

}  // namespace subnet

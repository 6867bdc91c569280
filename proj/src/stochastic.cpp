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

#include "subnet/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subnet/errors.hpp"

namespace subnet {

namespace {

class AnnealHooks : public TrainHooks {
 public:
  AnnealHooks(const ProbMask& pm, std::uint64_t seed) : pm_(pm), rng_(seed) {}

  void on_epoch_begin(std::size_t epoch, DenseNet&, OptimizerState&) override {
    probs_ = anneal_at(pm_, epoch);
  }

  const NetMask* batch_mask(std::size_t, std::size_t) override {
    current_ = realize(probs_, rng_);
    return &current_;
  }

 private:
  const ProbMask& pm_;
  Rng rng_;
  std::vector<Matrix> probs_;
  NetMask current_;
};

}  // namespace

std::string to_string(ProbInit v) {
  switch (v) {
    case ProbInit::kRandomUniform: return "random_uniform";
    case ProbInit::kTemperature: return "temperature";
    case ProbInit::kGaussianMixture: return "gaussian_mixture";
  }
  return "unknown";
}

std::string to_string(AnnealKind v) {
  switch (v) {
    case AnnealKind::kLinear: return "linear";
    case AnnealKind::kCosine: return "cosine";
    case AnnealKind::kExponential: return "exponential";
  }
  return "unknown";
}

std::string to_string(TemperatureVariant v) {
  return v == TemperatureVariant::kSymmetric ? "symmetric" : "reverse_dropout";
}

ProbInit parse_prob_init(const std::string& name) {
  if (name == "random_uniform") return ProbInit::kRandomUniform;
  if (name == "temperature") return ProbInit::kTemperature;
  if (name == "gaussian_mixture") return ProbInit::kGaussianMixture;
  throw ConfigError("unknown probability init '" + name + "'");
}

AnnealKind parse_anneal_kind(const std::string& name) {
  if (name == "linear") return AnnealKind::kLinear;
  if (name == "cosine") return AnnealKind::kCosine;
  if (name == "exponential") return AnnealKind::kExponential;
  throw ConfigError("unknown anneal schedule '" + name + "'");
}

TemperatureVariant parse_temperature_variant(const std::string& name) {
  if (name == "reverse_dropout") return TemperatureVariant::kReverseDropout;
  if (name == "symmetric") return TemperatureVariant::kSymmetric;
  throw ConfigError("unknown temperature variant '" + name + "'");
}

void ProbMask::validate() const {
  check_shape(target, target.shape());
  if (initial.size() != target.layers.size()) {
    throw ShapeError("probability matrices do not match target depth");
  }
  for (std::size_t l = 0; l < initial.size(); ++l) {
    if (initial[l].rows() != target.layers[l].rows ||
        initial[l].cols() != target.layers[l].cols) {
      throw ShapeError("probability matrix shape mismatch at layer " +
                       std::to_string(l));
    }
    for (double p : initial[l].data()) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("probabilities must lie in [0, 1]");
      }
    }
  }
  if (!(tau_init >= 0.0 && tau_init <= 1.0)) {
    throw ConfigError("tau must lie in [0, 1]");
  }
  if (!(exp_k > 0.0)) throw ConfigError("exponential k must be > 0");
}

ProbMask init_random(double sparsity, const NetShape& shape, std::uint64_t seed) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1]");
  }
  ProbMask pm;
  pm.init = ProbInit::kRandomUniform;
  pm.target = NetMask::filled(shape, 0);
  Rng rng(derive_seed(seed, Stream::kMask));
  for (std::size_t l = 0; l < shape.size(); ++l) {
    Matrix p(shape[l].rows, shape[l].cols);
    auto& bits = pm.target.layers[l].bits;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double u = rng.uniform();
      p.data()[i] = u;
      bits[i] = u > sparsity ? 1 : 0;
    }
    pm.initial.push_back(std::move(p));
  }
  return pm;
}

ProbMask opposed(const ProbMask& pm, double sparsity) {
  pm.validate();
  ProbMask out = pm;
  for (std::size_t l = 0; l < out.initial.size(); ++l) {
    auto& p = out.initial[l].data();
    auto& bits = out.target.layers[l].bits;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = 1.0 - p[i];
      bits[i] = p[i] > sparsity ? 1 : 0;
    }
  }
  return out;
}

ProbMask init_temperature(const NetMask& target, double tau,
                          TemperatureVariant variant) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  ProbMask pm;
  pm.init = ProbInit::kTemperature;
  pm.tau_init = tau;
  pm.target = target;
  const double on = variant == TemperatureVariant::kSymmetric ? 1.0 - tau : 1.0;
  for (const auto& m : target.layers) {
    Matrix p(m.rows, m.cols);
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = m.bits[i] ? on : tau;
    pm.initial.push_back(std::move(p));
  }
  return pm;
}

ProbMask init_gaussian_mixture(const NetMask& index, double mu1, double sigma1,
                               double mu2, double sigma2, std::uint64_t seed) {
  for (double v : {mu1, sigma1, mu2, sigma2}) {
    if (!std::isfinite(v)) throw ConfigError("mixture parameters must be finite");
  }
  if (sigma1 < 0.0 || sigma2 < 0.0) throw ConfigError("mixture sigma must be >= 0");
  ProbMask pm;
  pm.init = ProbInit::kGaussianMixture;
  pm.target = index;
  Rng rng(derive_seed(seed, Stream::kMask));
  for (const auto& m : index.layers) {
    Matrix p(m.rows, m.cols);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = m.bits[i] ? rng.normal(mu2, sigma2) : rng.normal(mu1, sigma1);
      p.data()[i] = std::clamp(v, 0.0, 1.0);
    }
    pm.initial.push_back(std::move(p));
  }
  return pm;
}

double anneal_decay(AnnealKind kind, double phase, double exp_k) {
  switch (kind) {
    case AnnealKind::kLinear: return 1.0 - phase;
    case AnnealKind::kCosine: return 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
    case AnnealKind::kExponential: return std::exp(-exp_k * phase);
  }
  return 1.0 - phase;
}

std::vector<Matrix> anneal_at(const ProbMask& pm, std::size_t epoch) {
  std::vector<Matrix> out = pm.initial;
  if (epoch == 0 && pm.anneal_epochs > 0) return out;
  const bool settled = epoch >= pm.anneal_epochs;
  const double decay =
      settled ? 0.0
              : anneal_decay(pm.anneal, static_cast<double>(epoch) /
                                            static_cast<double>(pm.anneal_epochs),
                             pm.exp_k);
  for (std::size_t l = 0; l < out.size(); ++l) {
    auto& p = out[l].data();
    const auto& bits = pm.target.layers[l].bits;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double b = bits[i] ? 1.0 : 0.0;
      p[i] = settled ? b : std::clamp(b + (p[i] - b) * decay, 0.0, 1.0);
    }
  }
  return out;
}

NetMask realize(const std::vector<Matrix>& probs, Rng& rng) {
  NetMask m;
  m.layers.reserve(probs.size());
  for (const auto& p : probs) {
    Mask layer(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.size(); ++i) {
      layer.bits[i] = rng.uniform() < p.data()[i] ? 1 : 0;
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

NetMask realize(const std::vector<Matrix>& probs, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::kRealize));
  return realize(probs, rng);
}

AnnealTuneResult anneal_tune(const DenseNet& parent, const ProbMask& pm,
                             const Dataset& data, const TrainConfig& tune,
                             std::uint64_t realize_seed,
                             const Dataset* validation,
                             Granularity granularity) {
  pm.validate();
  check_shape(pm.target, parent.shape());
  if (pm.anneal_epochs > tune.epochs) {
    throw ConfigError("anneal_epochs exceeds tuning epochs");
  }
  AnnealHooks hooks(pm, derive_seed(realize_seed, Stream::kRealize));
  AnnealTuneResult result;
  result.training = train(parent, data, tune, &hooks, validation);
  result.child = prune(result.training.net, pm.target, granularity);
  result.child.lineage = {network_id(parent), "anneal", 1, 0, realize_seed};
  return result;
}

}  // namespace subnet

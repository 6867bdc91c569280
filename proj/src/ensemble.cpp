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

#include "subnet/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subnet/errors.hpp"
#include "subnet/numeric.hpp"
#include "subnet/rng.hpp"

namespace subnet {

namespace {

void check_members(std::span<const Matrix> members) {
  if (members.empty()) throw ShapeError("no members to combine");
  for (const auto& m : members) {
    if (!m.same_shape(members.front())) {
      throw ShapeError("member prediction shapes differ");
    }
  }
}

void check_pair(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("prediction shapes differ");
}

PredictionSet predictions(const DenseNet& net, const Dataset& data) {
  return {predict_proba(net, data.inputs), data.labels};
}

double fitness_of(const DenseNet& net, const Dataset& validation) {
  if (validation.size() == 0) return 0.0;
  return accuracy(predictions(net, validation));
}

}  // namespace

void PredictionSet::validate() const {
  if (probs.rows() != labels.size()) {
    throw ShapeError("prediction rows and labels differ in length");
  }
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (double p : probs.row(r)) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw NumericError("prediction row " + std::to_string(r) +
                           " has an invalid probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw NumericError("prediction row " + std::to_string(r) +
                         " does not sum to 1");
    }
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= probs.cols()) {
      throw ConfigError("label out of range at row " + std::to_string(r));
    }
  }
}

Matrix combine_mean(std::span<const Matrix> members) {
  check_members(members);
  Matrix out(members.front().rows(), members.front().cols());
  std::vector<double> column(members.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t m = 0; m < members.size(); ++m) {
      column[m] = members[m].data()[i];
    }
    out.data()[i] = exact_mean(column);
  }
  return out;
}

std::vector<int> combine_vote(std::span<const Matrix> members) {
  check_members(members);
  const std::size_t n = members.front().rows();
  const std::size_t c = members.front().cols();
  std::vector<int> out(n);
  std::vector<std::size_t> votes(c);
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& m : members) ++votes[argmax(m.row(r))];
    // max_element returns the first maximum: lowest class on ties.
    out[r] = static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                              votes.begin());
  }
  return out;
}

double accuracy(const PredictionSet& ps) {
  return accuracy_of(ps.probs, ps.labels);
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) {
    throw ShapeError("prediction and label counts differ");
  }
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += predicted[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double nll(const PredictionSet& ps, double floor) {
  return cross_entropy(ps.probs, ps.labels, floor);
}

double ece(const PredictionSet& ps, std::size_t bins) {
  if (bins == 0) throw ConfigError("ece needs at least one bin");
  if (ps.probs.rows() != ps.labels.size()) {
    throw ShapeError("prediction rows and labels differ in length");
  }
  const std::size_t n = ps.labels.size();
  if (n == 0) return 0.0;
  const double b = static_cast<double>(bins);
  auto edge = [b](std::size_t i) { return static_cast<double>(i) / b; };

  std::vector<std::size_t> count(bins, 0);
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<std::size_t> hits(bins, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = ps.probs.row(r);
    const std::size_t pred = argmax(row);
    const double conf = row[pred];
    // Bin i holds (i/B, (i+1)/B]; snap the estimate onto the exact edges.
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(conf * b)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    auto i = static_cast<std::size_t>(idx);
    while (i > 0 && conf <= edge(i)) --i;
    while (i + 1 < bins && conf > edge(i + 1)) ++i;
    ++count[i];
    conf_sum[i] += conf;
    hits[i] += static_cast<int>(pred) == ps.labels[r] ? 1 : 0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    if (count[i] == 0) continue;
    const double m = static_cast<double>(count[i]);
    const double acc = static_cast<double>(hits[i]) / m;
    const double conf = conf_sum[i] / m;
    total += (m / static_cast<double>(n)) * std::abs(acc - conf);
  }
  return total;
}

double mean_kl(const Matrix& reference, const Matrix& perturbed, double floor) {
  check_pair(reference, perturbed);
  if (reference.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < reference.rows(); ++r) {
    const auto p = reference.row(r);
    const auto q = perturbed.row(r);
    double row = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (p[c] <= 0.0) continue;
      row += p[c] * (std::log(std::max(p[c], floor)) - std::log(std::max(q[c], floor)));
    }
    total += row;
  }
  return total / static_cast<double>(reference.rows());
}

double mean_output_mse(const Matrix& reference, const Matrix& perturbed) {
  check_pair(reference, perturbed);
  if (reference.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < reference.rows(); ++r) {
    const auto p = reference.row(r);
    const auto q = perturbed.row(r);
    double row = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double d = p[c] - q[c];
      row += d * d;
    }
    total += row;
  }
  return total / static_cast<double>(reference.rows());
}

std::vector<std::size_t> select_top_k(std::span<const double> fitness,
                                      std::size_t k) {
  if (k > fitness.size()) {
    throw ConfigError("cannot select " + std::to_string(k) + " of " +
                      std::to_string(fitness.size()) + " candidates");
  }
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitness[a] > fitness[b];
  });
  order.resize(k);
  return order;
}

Metrics evaluate(const PredictionSet& ps, std::size_t bins) {
  return {accuracy(ps), nll(ps), ece(ps, bins)};
}

void TrustRegionSpec::validate() const {
  if (sigmas.empty() || sparsities.empty()) {
    throw ConfigError("trust region grid is empty");
  }
  if (!std::is_sorted(sigmas.begin(), sigmas.end()) ||
      !std::is_sorted(sparsities.begin(), sparsities.end())) {
    throw ConfigError("trust region grids must be ascending");
  }
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw ConfigError("trust region sigma must be >= 0");
  }
  for (double s : sparsities) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ConfigError("trust region sparsity must lie in [0, 1]");
    }
  }
  if (!(kl_target > 0.0)) throw ConfigError("kl_target must be > 0");
  if (samples_per_cell == 0) throw ConfigError("samples_per_cell must be >= 1");
}

TrustRegionResult trust_region_search(const DenseNet& parent,
                                      const Dataset& probe,
                                      const TrustRegionSpec& spec) {
  spec.validate();
  if (probe.size() == 0) throw ConfigError("trust region probe set is empty");
  const Matrix reference = predict_proba(parent, probe.inputs);
  const NetShape shape = parent.shape();

  TrustRegionResult result;
  for (double sigma : spec.sigmas) {
    for (double sparsity : spec.sparsities) {
      std::vector<double> kls;
      std::vector<double> accs;
      for (std::size_t s = 0; s < spec.samples_per_cell; ++s) {
        const std::uint64_t seed = derive_seed(spec.seed, Stream::kProbe, s);
        const NetMask mask = sample_mask(
            {sparsity, Granularity::kUnstructured, spec.scope, seed}, shape);
        const ChildNetwork child = mutate(
            parent, mask, {spec.noise_mean, sigma, derive_seed(seed, Stream::kNoise)});
        const Matrix probs = predict_proba(child.net, probe.inputs);
        kls.push_back(mean_kl(reference, probs));
        accs.push_back(accuracy_of(probs, probe.labels));
      }
      result.grid.push_back({sigma, sparsity, exact_mean(kls), exact_mean(accs)});
    }
  }

  const TrustRegionCell* best = nullptr;
  for (const auto& cell : result.grid) {
    if (cell.mean_kl <= spec.kl_target &&
        (best == nullptr || cell.mean_accuracy > best->mean_accuracy)) {
      best = &cell;
    }
  }
  if (best == nullptr) {
    result.within_target = false;
    for (const auto& cell : result.grid) {
      if (best == nullptr || cell.mean_kl < best->mean_kl) best = &cell;
    }
  }
  result.best = *best;
  return result;
}

std::string to_string(Combination c) {
  return c == Combination::kVote ? "vote" : "mean";
}

Combination parse_combination(const std::string& name) {
  if (name == "mean") return Combination::kMean;
  if (name == "vote") return Combination::kVote;
  throw ConfigError("unknown combination '" + name + "'");
}

std::string to_string(MaskMode m) {
  return m == MaskMode::kPartition ? "partition" : "random";
}

MaskMode parse_mask_mode(const std::string& name) {
  if (name == "random") return MaskMode::kRandom;
  if (name == "partition") return MaskMode::kPartition;
  throw ConfigError("unknown mask mode '" + name + "'");
}

std::vector<Matrix> member_probabilities(const EnsembleRecord& record,
                                         const Matrix& inputs) {
  std::vector<Matrix> out;
  if (record.include_parent) out.push_back(predict_proba(record.parent, inputs));
  for (const auto& m : record.members) out.push_back(predict_proba(m.net, inputs));
  return out;
}

Metrics evaluate(const EnsembleRecord& record, const Dataset& test) {
  const std::vector<Matrix> probs = member_probabilities(record, test.inputs);
  const PredictionSet mean{combine_mean(probs), test.labels};
  Metrics m = evaluate(mean);
  if (record.combination == Combination::kVote) {
    m.accuracy = accuracy(combine_vote(probs), test.labels);
  }
  return m;
}

void NoisyConfig::validate() const {
  if (population == 0) throw ConfigError("population must be >= 1");
  if (k == 0 || k > population) throw ConfigError("k must lie in [1, population]");
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1]");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  if (!std::isfinite(noise_mean)) throw ConfigError("noise mean must be finite");
  if (mirrored && population % 4 != 0) {
    throw ConfigError("mirrored populations must be a multiple of 4");
  }
  SamplerSpec{sparsity, granularity, scope, 0}.validate();
}

std::size_t partition_group_size(double sparsity) {
  if (!(sparsity > 0.0 && sparsity < 1.0)) return 0;
  const double k = 1.0 / (1.0 - sparsity);
  const double rounded = std::round(k);
  if (rounded < 2.0 || std::abs(k - rounded) > 1e-9 * rounded) return 0;
  return static_cast<std::size_t>(rounded);
}

namespace {

void validate_members(std::size_t members, double sparsity,
                      Granularity granularity, Scope scope, MaskMode mode) {
  if (members == 0) throw ConfigError("members must be >= 1");
  SamplerSpec{sparsity, granularity, scope, 0}.validate();
  if (mode == MaskMode::kPartition) {
    if (partition_group_size(sparsity) == 0) {
      throw ConfigError("partition mode needs sparsity = 1 - 1/k for integer k >= 2");
    }
    if (granularity == Granularity::kStructured) {
      throw ConfigError("partition mode is unstructured only");
    }
  }
}

}  // namespace

void SparseConfig::validate() const {
  validate_members(members, sparsity, granularity, scope, mode);
  tune.validate();
}

void StochasticConfig::validate() const {
  validate_members(members, sparsity, granularity, scope, mode);
  tune.validate();
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (anneal_epochs > tune.epochs) {
    throw ConfigError("anneal_epochs exceeds tuning epochs");
  }
  if (!(exp_k > 0.0)) throw ConfigError("exp_k must be > 0");
  if (!(mix_sigma1 >= 0.0 && mix_sigma2 >= 0.0) ||
      !std::isfinite(mix_mu1) || !std::isfinite(mix_mu2)) {
    throw ConfigError("gaussian mixture parameters are invalid");
  }
  if (init == ProbInit::kRandomUniform && mode == MaskMode::kPartition &&
      partition_group_size(sparsity) != 2) {
    throw ConfigError("opposed random probabilities need sparsity 0.5");
  }
}

std::vector<NetMask> member_masks(const NetShape& shape, std::size_t members,
                                  double sparsity, Granularity granularity,
                                  Scope scope, MaskMode mode,
                                  std::uint64_t seed) {
  std::vector<NetMask> masks;
  masks.reserve(members);
  if (mode == MaskMode::kRandom) {
    for (std::size_t i = 0; i < members; ++i) {
      masks.push_back(sample_mask(
          {sparsity, granularity, scope, derive_seed(seed, Stream::kMask, i)}, shape));
    }
    return masks;
  }
  const std::size_t k = partition_group_size(sparsity);
  if (k == 0) throw ConfigError("sparsity does not define a partition");
  std::vector<NetMask> group;
  for (std::size_t i = 0; i < members; ++i) {
    if (i % k == 0) group = partition(k, shape, derive_seed(seed, Stream::kMask, i / k));
    masks.push_back(group[i % k]);
  }
  return masks;
}

namespace {

EnsembleResult finish(const DenseNet& parent, const DataSplits& data,
                      std::vector<ChildNetwork> candidates,
                      std::vector<double> fitness,
                      std::vector<std::size_t> selected,
                      Combination combination, bool include_parent) {
  EnsembleResult result;
  result.record.parent = parent;
  result.record.combination = combination;
  result.record.include_parent = include_parent;
  result.candidate_fitness = std::move(fitness);
  result.selected = std::move(selected);
  for (std::size_t idx : result.selected) {
    MemberReport report;
    report.lineage = candidates[idx].lineage;
    report.fitness = result.candidate_fitness[idx];
    report.test = evaluate(predictions(candidates[idx].net, data.test));
    result.members.push_back(std::move(report));
    result.record.members.push_back(std::move(candidates[idx]));
  }
  result.ensemble = evaluate(result.record, data.test);
  result.parent = evaluate(predictions(parent, data.test));
  return result;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

EnsembleResult run_noisy(const DenseNet& parent, const DataSplits& data,
                         const NoisyConfig& config) {
  config.validate();
  const NetShape shape = parent.shape();
  std::vector<ChildNetwork> candidates;
  candidates.reserve(config.population);
  const std::size_t step = config.mirrored ? 4 : 1;
  for (std::size_t g = 0; g * step < config.population; ++g) {
    const std::uint64_t seed = derive_seed(config.seed, Stream::kMember, g);
    const NetMask mask = sample_mask(
        {config.sparsity, config.granularity, config.scope, seed}, shape);
    const NoiseSpec noise{config.noise_mean, config.sigma,
                          derive_seed(seed, Stream::kNoise)};
    if (config.mirrored) {
      for (auto& child : mirrored_quad(parent, mask, noise)) {
        candidates.push_back(std::move(child));
      }
    } else {
      candidates.push_back(mutate(parent, mask, noise));
    }
  }
  std::vector<double> fitness;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].lineage.index = i;
    fitness.push_back(fitness_of(candidates[i].net, data.validation));
  }
  auto selected = select_top_k(fitness, config.k);
  return finish(parent, data, std::move(candidates), std::move(fitness),
                std::move(selected), config.combination, config.include_parent);
}

EnsembleResult run_sparse(const DenseNet& parent, const DataSplits& data,
                          const SparseConfig& config) {
  config.validate();
  const auto masks = member_masks(parent.shape(), config.members, config.sparsity,
                                  config.granularity, config.scope, config.mode,
                                  config.seed);
  std::vector<ChildNetwork> candidates;
  std::vector<double> fitness;
  for (std::size_t i = 0; i < config.members; ++i) {
    ChildNetwork child = prune(parent, masks[i], config.granularity);
    TrainConfig tc = config.tune;
    tc.seed = derive_seed(config.seed, Stream::kTune, i);
    tune(child, data.train, tc);
    child.lineage.method = "sparse";
    child.lineage.index = i;
    child.lineage.seed = tc.seed;
    fitness.push_back(fitness_of(child.net, data.validation));
    candidates.push_back(std::move(child));
  }
  return finish(parent, data, std::move(candidates), std::move(fitness),
                all_indices(config.members), config.combination,
                config.include_parent);
}

EnsembleResult run_stochastic(const DenseNet& parent, const DataSplits& data,
                              const StochasticConfig& config) {
  config.validate();
  const NetShape shape = parent.shape();
  std::vector<NetMask> targets;
  if (config.init != ProbInit::kRandomUniform) {
    targets = member_masks(shape, config.members, config.sparsity,
                           config.granularity, config.scope, config.mode,
                           config.seed);
  }
  std::vector<ChildNetwork> candidates;
  std::vector<double> fitness;
  ProbMask previous;
  for (std::size_t i = 0; i < config.members; ++i) {
    ProbMask pm;
    switch (config.init) {
      case ProbInit::kTemperature:
        pm = init_temperature(targets[i], config.tau, config.variant);
        break;
      case ProbInit::kGaussianMixture:
        pm = init_gaussian_mixture(targets[i], config.mix_mu1, config.mix_sigma1,
                                   config.mix_mu2, config.mix_sigma2,
                                   derive_seed(config.seed, Stream::kMask, i));
        break;
      case ProbInit::kRandomUniform:
        if (config.mode == MaskMode::kPartition && i % 2 == 1) {
          pm = opposed(previous, config.sparsity);
        } else {
          pm = init_random(config.sparsity, shape,
                           derive_seed(config.seed, Stream::kMask,
                                       config.mode == MaskMode::kPartition ? i / 2 : i));
        }
        previous = pm;
        break;
    }
    pm.anneal = config.anneal;
    pm.anneal_epochs = config.anneal_epochs;
    pm.exp_k = config.exp_k;

    TrainConfig tc = config.tune;
    tc.seed = derive_seed(config.seed, Stream::kTune, i);
    AnnealTuneResult run =
        anneal_tune(parent, pm, data.train, tc,
                    derive_seed(config.seed, Stream::kRealize, i), nullptr,
                    config.granularity);
    ChildNetwork child = std::move(run.child);
    child.lineage.method = "stochastic";
    child.lineage.index = i;
    child.lineage.seed = tc.seed;
    fitness.push_back(fitness_of(child.net, data.validation));
    candidates.push_back(std::move(child));
  }
  return finish(parent, data, std::move(candidates), std::move(fitness),
                all_indices(config.members), config.combination,
                config.include_parent);
}

}  // namespace subnet

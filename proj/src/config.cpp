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

#include "subnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "subnet/errors.hpp"

namespace subnet {

namespace {

using K = ExperimentKind;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

double parse_real(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& s) {
  return static_cast<std::size_t>(parse_u64(s));
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& s, F item) {
  std::vector<T> out;
  for (const auto& part : split_list(s)) out.push_back(item(part));
  return out;
}

struct Entry {
  std::size_t line = 0;
  std::string value;
};

class Binder {
 public:
  Binder(std::map<std::string, Entry> entries, std::string origin,
         std::vector<std::string>& errors)
      : entries_(std::move(entries)), origin_(std::move(origin)), errors_(errors) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  // Parses `key` into `out` when present. Reports keys that do not apply.
  template <typename T, typename F>
  void bind(const std::string& key, bool applies, T& out, F parse) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return;
    used_.insert(key);
    if (!applies) {
      error(key, "not used by this experiment kind");
      return;
    }
    try {
      out = parse(it->second.value);
    } catch (const std::exception& e) {
      error(key, e.what());
    }
  }

  void error(const std::string& key, const std::string& message) {
    const auto it = entries_.find(key);
    std::string where = origin_;
    if (it != entries_.end()) where += ":" + std::to_string(it->second.line);
    errors_.push_back(where + ": " + key + ": " + message);
  }

  void finish() {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        errors_.push_back(origin_ + ":" + std::to_string(entry.line) +
                          ": unknown key '" + key + "'");
      }
    }
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
  std::string origin_;
  std::vector<std::string>& errors_;
};

bool is_one_of(K kind, std::initializer_list<K> kinds) {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

struct TrainKeys {
  std::optional<ScheduleKind> schedule;
  double lr_max = 0.0;
  double lr_min = 0.0;
  double warm_fraction = 0.3;
  double decay_start = 0.5;
  double decay_end = 0.9;
  std::vector<double> breakpoints;
  std::vector<double> factors;
  bool momentum_cycle = false;
  double momentum_max = 0.95;
  double momentum_min = 0.85;
};

void bind_training(Binder& b, const std::string& prefix, bool applies,
                   TrainConfig& tc, TrainKeys& keys) {
  auto key = [&](const char* name) { return prefix + "." + name; };
  b.bind(key("optimizer"), applies, tc.optimizer.kind,
         [](const std::string& s) { return parse_optimizer_kind(s); });
  b.bind(key("lr"), applies, tc.optimizer.learning_rate, parse_real);
  b.bind(key("momentum"), applies, tc.optimizer.momentum, parse_real);
  b.bind(key("epochs"), applies, tc.epochs, parse_count);
  b.bind(key("batch_size"), applies, tc.batch_size, parse_count);
  b.bind(key("schedule"), applies, keys.schedule,
         [](const std::string& s) { return std::optional(parse_schedule_kind(s)); });
  b.bind(key("lr_max"), applies, keys.lr_max, parse_real);
  b.bind(key("lr_min"), applies, keys.lr_min, parse_real);
  b.bind(key("warm_fraction"), applies, keys.warm_fraction, parse_real);
  b.bind(key("decay_start"), applies, keys.decay_start, parse_real);
  b.bind(key("decay_end"), applies, keys.decay_end, parse_real);
  b.bind(key("breakpoints"), applies, keys.breakpoints,
         [](const std::string& s) { return parse_list<double>(s, parse_real); });
  b.bind(key("factors"), applies, keys.factors,
         [](const std::string& s) { return parse_list<double>(s, parse_real); });
  b.bind(key("momentum_cycle"), applies, keys.momentum_cycle, parse_bool);
  b.bind(key("momentum_max"), applies, keys.momentum_max, parse_real);
  b.bind(key("momentum_min"), applies, keys.momentum_min, parse_real);
}

void finish_training(Binder& b, const std::string& prefix, TrainConfig& tc,
                     const TrainKeys& keys) {
  const double lr = tc.optimizer.learning_rate;
  try {
    if (keys.schedule) {
      Schedule s;
      switch (*keys.schedule) {
        case ScheduleKind::kConstant: s = Schedule::constant(lr); break;
        case ScheduleKind::kStepDecay:
          s = Schedule::step_decay(lr, keys.breakpoints, keys.factors);
          break;
        case ScheduleKind::kLinearDecay:
          s = Schedule::linear_decay(lr, keys.lr_min, keys.decay_start, keys.decay_end);
          break;
        case ScheduleKind::kOneCycle:
          s = Schedule::one_cycle(lr, keys.lr_max, keys.lr_min, keys.warm_fraction);
          break;
        case ScheduleKind::kCosine: s = Schedule::cosine(lr, keys.lr_min); break;
      }
      if (keys.momentum_cycle) s.momentum = MomentumCycle{keys.momentum_max, keys.momentum_min};
      s.validate();
      tc.schedule = s;
    } else {
      tc.schedule.reset();
    }
  } catch (const std::exception& e) {
    b.error(prefix + ".schedule", e.what());
  }
  try {
    tc.validate();
  } catch (const std::exception& e) {
    b.error(prefix + ".*", e.what());
  }
}

TrainKeys default_tune_keys() {
  TrainKeys k;
  k.schedule = ScheduleKind::kOneCycle;
  k.lr_max = 0.02;
  k.lr_min = 2e-6;
  k.warm_fraction = 0.3;
  return k;
}

void check_range(Binder& b, const std::string& key, const std::vector<double>& v,
                 double lo, double hi) {
  for (double x : v) {
    if (!(x >= lo && x <= hi)) {
      std::ostringstream os;
      os << "value " << x << " is outside [" << lo << ", " << hi << "]";
      b.error(key, os.str());
    }
  }
}

}  // namespace

TrainConfig default_train_config() {
  TrainConfig tc;
  tc.epochs = 10;
  return tc;
}

TrainConfig default_tune_config() {
  TrainConfig tc;
  tc.optimizer.learning_rate = 0.002;
  tc.epochs = 3;
  tc.schedule = Schedule::one_cycle(0.002, 0.02, 2e-6, 0.3);
  return tc;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case K::kDecisionBoundary: return "decision_boundary";
    case K::kKlAblation: return "kl_ablation";
    case K::kSparsityAblation: return "sparsity_ablation";
    case K::kStructureAblation: return "structure_ablation";
    case K::kEnsembleSize: return "ensemble_size";
    case K::kAnnealAblation: return "anneal_ablation";
    case K::kScheduleCompare: return "schedule_compare";
    case K::kDiversityReport: return "diversity_report";
    case K::kHashCorpus: return "hash_corpus";
    case K::kLandscape: return "landscape";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (K k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::runtime_error(errors.empty() ? "invalid config"
                                        : errors.front() +
                                              (errors.size() > 1
                                                   ? " (+" + std::to_string(errors.size() - 1) +
                                                         " more)"
                                                   : "")),
      errors_(std::move(errors)) {}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split_list(text)) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_u64(part));
      continue;
    }
    const std::uint64_t lo = parse_u64(trim(part.substr(0, dash)));
    const std::uint64_t hi = parse_u64(trim(part.substr(dash + 1)));
    if (hi < lo) throw ConfigError("empty seed range '" + part + "'");
    if (hi - lo > 100000) throw ConfigError("seed range '" + part + "' is too long");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no seeds given");
  return out;
}

namespace {

ExperimentConfig parse_impl(const std::string& text, const std::string& origin,
                            std::vector<std::string>& errors) {
  std::map<std::string, Entry> entries;
  {
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        errors.push_back(origin + ":" + std::to_string(no) + ": expected 'key = value'");
        continue;
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        errors.push_back(origin + ":" + std::to_string(no) + ": missing key");
        continue;
      }
      if (entries.count(key)) {
        errors.push_back(origin + ":" + std::to_string(no) + ": duplicate key '" + key +
                         "' (first on line " + std::to_string(entries[key].line) + ")");
        continue;
      }
      entries[key] = {no, value};
    }
  }

  Binder b(entries, origin, errors);
  ExperimentConfig c;

  if (!b.has("schema_version")) {
    errors.push_back(origin + ": missing required key 'schema_version'");
  }
  b.bind("schema_version", true, c.schema_version,
         [](const std::string& s) { return static_cast<int>(parse_u64(s)); });
  if (b.has("schema_version") && c.schema_version != kSchemaVersion) {
    b.error("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                                  " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  bool kind_ok = false;
  if (!b.has("kind")) {
    errors.push_back(origin + ": missing required key 'kind'");
  } else {
    const std::size_t before = errors.size();
    b.bind("kind", true, c.kind,
           [](const std::string& s) { return parse_experiment_kind(s); });
    kind_ok = errors.size() == before;
  }
  const K kind = c.kind;
  auto for_kinds = [&](std::initializer_list<K> ks) { return kind_ok && is_one_of(kind, ks); };

  const bool model_kind = kind_ok && kind != K::kHashCorpus;
  const bool tuned = for_kinds({K::kSparsityAblation, K::kStructureAblation, K::kEnsembleSize,
                                K::kAnnealAblation, K::kScheduleCompare,
                                K::kDiversityReport, K::kLandscape});

  // Kind-dependent defaults, applied before explicit values.
  if (kind_ok) {
    switch (kind) {
      case K::kDecisionBoundary:
        c.sigmas = {0.05, 0.1, 0.15, 0.2, 0.25};
        c.sparsities = {0.0, 0.3, 0.6, 0.9};
        break;
      case K::kKlAblation:
        c.sigmas = {0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2};
        c.sparsities = {0.5};
        c.children = 10;
        break;
      case K::kStructureAblation:
        c.granularities = {Granularity::kUnstructured, Granularity::kStructured};
        c.modes = {MaskMode::kRandom};
        c.sparsities = {0.25, 0.5, 0.75};
        break;
      case K::kEnsembleSize:
        c.sizes = {4, 8, 16, 32};
        c.sparsities = {0.5};
        break;
      case K::kAnnealAblation:
        c.members = 1;
        c.sparsities = {0.95};
        c.modes = {MaskMode::kRandom};
        c.tune.epochs = 20;
        break;
      case K::kScheduleCompare:
        c.modes = {MaskMode::kRandom, MaskMode::kPartition};
        c.sparsities = {0.5};
        break;
      case K::kDiversityReport:
        c.sigmas = {0.05};
        c.sparsities = {0.5};
        c.members = 4;
        break;
      default:
        c.sparsities = {0.5};
        break;
    }
    if (kind == K::kSparsityAblation) c.sparsities = {0.5, 0.75, 0.875};
  }

  // Data and model.
  b.bind("dataset", model_kind, c.data.source, [](const std::string& s) {
    if (s != "spiral" && s != "blobs" && s != "csv") {
      throw ConfigError("expected spiral, blobs or csv, got '" + s + "'");
    }
    return s;
  });
  b.bind("dataset.n", model_kind, c.data.n, parse_count);
  b.bind("dataset.noise", model_kind, c.data.noise, parse_real);
  b.bind("dataset.turns", model_kind, c.data.turns, parse_real);
  b.bind("dataset.classes", model_kind, c.data.classes, parse_count);
  b.bind("dataset.separation", model_kind, c.data.separation, parse_real);
  b.bind("dataset.sd", model_kind, c.data.sd, parse_real);
  b.bind("dataset.path", model_kind, c.data.path, [](const std::string& s) { return s; });
  b.bind("split", model_kind, c.data.split, [](const std::string& s) {
    const auto v = parse_list<double>(s, parse_real);
    if (v.size() != 3) throw ConfigError("expected three fractions (train, validation, test)");
    return std::array<double, 3>{v[0], v[1], v[2]};
  });
  b.bind("model.hidden", model_kind, c.model.hidden,
         [](const std::string& s) { return parse_list<std::size_t>(s, parse_count); });
  b.bind("model.activation", model_kind, c.model.activation,
         [](const std::string& s) { return parse_activation(s); });

  TrainKeys train_keys;
  TrainKeys tune_keys = default_tune_keys();
  bind_training(b, "train", model_kind, c.train, train_keys);
  bind_training(b, "tune", tuned, c.tune, tune_keys);
  b.bind("seeds", true, c.seeds, parse_seed_list);

  // Method parameters.
  const bool noisy_kind = for_kinds({K::kDecisionBoundary, K::kKlAblation, K::kDiversityReport});
  b.bind("sigmas", noisy_kind, c.sigmas,
         [](const std::string& s) { return parse_list<double>(s, parse_real); });
  b.bind("sparsities", model_kind, c.sparsities,
         [](const std::string& s) { return parse_list<double>(s, parse_real); });
  b.bind("noise_mean", noisy_kind, c.noise_mean, parse_real);
  b.bind("children", for_kinds({K::kDecisionBoundary, K::kKlAblation}), c.children, parse_count);
  b.bind("scope", model_kind, c.scope, [](const std::string& s) { return parse_scope(s); });
  b.bind("granularities",
         for_kinds({K::kSparsityAblation, K::kStructureAblation, K::kEnsembleSize,
                    K::kScheduleCompare, K::kLandscape}),
         c.granularities, [](const std::string& s) {
           return parse_list<Granularity>(s, [](const std::string& x) { return parse_granularity(x); });
         });
  const bool ensemble_kind = for_kinds({K::kSparsityAblation, K::kStructureAblation,
                                        K::kEnsembleSize, K::kAnnealAblation,
                                        K::kScheduleCompare});
  b.bind("members", ensemble_kind || for_kinds({K::kDiversityReport}), c.members, parse_count);
  b.bind("sizes", for_kinds({K::kEnsembleSize}), c.sizes,
         [](const std::string& s) { return parse_list<std::size_t>(s, parse_count); });
  b.bind("modes", ensemble_kind, c.modes, [](const std::string& s) {
    return parse_list<MaskMode>(s, [](const std::string& x) { return parse_mask_mode(x); });
  });
  b.bind("combination", ensemble_kind || for_kinds({K::kDecisionBoundary}), c.combination,
         [](const std::string& s) { return parse_combination(s); });
  b.bind("include_parent", ensemble_kind || for_kinds({K::kDecisionBoundary}),
         c.include_parent, [](const std::string& s) { return std::optional(parse_bool(s)); });
  b.bind("population", for_kinds({K::kDecisionBoundary}), c.population, parse_count);
  b.bind("k", for_kinds({K::kDecisionBoundary}), c.k, parse_count);
  b.bind("mirrored", for_kinds({K::kDecisionBoundary, K::kDiversityReport}), c.mirrored,
         parse_bool);

  const bool anneal_kind = for_kinds({K::kAnnealAblation});
  const bool stochastic_kind = for_kinds({K::kAnnealAblation, K::kDiversityReport});
  b.bind("inits", anneal_kind, c.inits, [](const std::string& s) {
    return parse_list<ProbInit>(s, [](const std::string& x) { return parse_prob_init(x); });
  });
  b.bind("anneals", anneal_kind, c.anneals, [](const std::string& s) {
    return parse_list<AnnealKind>(s, [](const std::string& x) { return parse_anneal_kind(x); });
  });
  b.bind("tau", stochastic_kind, c.tau, parse_real);
  b.bind("variant", stochastic_kind, c.variant,
         [](const std::string& s) { return parse_temperature_variant(s); });
  b.bind("anneal_epochs", stochastic_kind, c.anneal_epochs, parse_count);
  b.bind("exp_k", stochastic_kind, c.exp_k, parse_real);
  b.bind("mix_mu1", anneal_kind, c.mix_mu1, parse_real);
  b.bind("mix_sigma1", anneal_kind, c.mix_sigma1, parse_real);
  b.bind("mix_mu2", anneal_kind, c.mix_mu2, parse_real);
  b.bind("mix_sigma2", anneal_kind, c.mix_sigma2, parse_real);
  b.bind("baselines", anneal_kind, c.baselines, parse_bool);
  b.bind("pruning_epochs", anneal_kind, c.pruning_epochs, parse_count);
  b.bind("tune_schedules", for_kinds({K::kScheduleCompare}), c.tune_schedules,
         [](const std::string& s) {
           return parse_list<ScheduleKind>(s, [](const std::string& x) { return parse_schedule_kind(x); });
         });
  b.bind("kl_target", for_kinds({K::kKlAblation}), c.kl_target, parse_real);
  b.bind("samples_per_cell", for_kinds({K::kKlAblation}), c.samples_per_cell, parse_count);
  b.bind("grid_resolution", for_kinds({K::kDecisionBoundary}), c.grid_resolution, parse_count);
  b.bind("ece_bins", model_kind, c.ece_bins, parse_count);
  const bool hash_kind = for_kinds({K::kHashCorpus});
  b.bind("dir_a", hash_kind, c.dir_a, [](const std::string& s) { return s; });
  b.bind("dir_b", hash_kind, c.dir_b, [](const std::string& s) { return s; });
  b.bind("span", for_kinds({K::kLandscape}), c.span, parse_real);
  b.bind("resolution", for_kinds({K::kLandscape}), c.resolution, parse_count);
  b.finish();

  if (!kind_ok) return c;

  // Field checks.
  if (model_kind) {
    finish_training(b, "train", c.train, train_keys);
    if (tuned) finish_training(b, "tune", c.tune, tune_keys);
    if (c.data.source == "csv" && c.data.path.empty()) {
      b.error("dataset.path", "required when dataset = csv");
    }
    if (c.data.source != "csv" && c.data.n < 2) b.error("dataset.n", "must be >= 2");
    if (!(c.data.noise >= 0.0)) b.error("dataset.noise", "must be >= 0");
    if (!(c.data.turns > 0.0)) b.error("dataset.turns", "must be > 0");
    if (c.data.source == "blobs" && c.data.classes < 2) b.error("dataset.classes", "must be >= 2");
    if (!(c.data.sd >= 0.0)) b.error("dataset.sd", "must be >= 0");
    double sum = 0.0;
    for (double f : c.data.split) {
      if (!(f >= 0.0)) b.error("split", "fractions must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) b.error("split", "fractions must sum to 1");
    if (c.data.split[0] <= 0.0) b.error("split", "training fraction must be > 0");
    if (c.data.split[2] <= 0.0) b.error("split", "test fraction must be > 0");
    if (c.model.hidden.empty()) b.error("model.hidden", "needs at least one hidden layer");
    for (std::size_t h : c.model.hidden) {
      if (h == 0) b.error("model.hidden", "layer widths must be >= 1");
    }
    if (c.sparsities.empty()) b.error("sparsities", "must not be empty");
    check_range(b, "sparsities", c.sparsities, 0.0, 1.0);
    if (c.ece_bins == 0) b.error("ece_bins", "must be >= 1");
  }
  if (noisy_kind) {
    if (c.sigmas.empty()) b.error("sigmas", "must not be empty");
    for (double s : c.sigmas) {
      if (!(s >= 0.0) || !std::isfinite(s)) b.error("sigmas", "sigma must be a finite value >= 0");
    }
    if (!std::isfinite(c.noise_mean)) b.error("noise_mean", "must be finite");
  }
  if (for_kinds({K::kDecisionBoundary, K::kKlAblation}) && c.children == 0) {
    b.error("children", "must be >= 1");
  }
  if (for_kinds({K::kDecisionBoundary})) {
    if (c.grid_resolution < 2) b.error("grid_resolution", "must be >= 2");
    if (c.population == 0) b.error("population", "must be >= 1");
    if (c.k == 0 || c.k > c.population) b.error("k", "must lie in [1, population]");
    if (c.mirrored && c.population % 4 != 0) {
      b.error("mirrored", "population must be a multiple of 4");
    }
  }
  if (for_kinds({K::kKlAblation})) {
    if (!(c.kl_target > 0.0)) b.error("kl_target", "must be > 0");
    if (c.samples_per_cell == 0) b.error("samples_per_cell", "must be >= 1");
  }
  if (ensemble_kind || for_kinds({K::kDiversityReport})) {
    if (c.members == 0) b.error("members", "must be >= 1");
  }
  if (for_kinds({K::kDiversityReport}) && c.members < 2) {
    b.error("members", "diversity needs >= 2 members");
  }
  if (for_kinds({K::kDiversityReport}) && c.mirrored && c.members % 4 != 0) {
    b.error("mirrored", "members must be a multiple of 4");
  }
  if (for_kinds({K::kEnsembleSize})) {
    if (c.sizes.empty()) b.error("sizes", "must not be empty");
    for (std::size_t s : c.sizes) {
      if (s == 0) b.error("sizes", "ensemble sizes must be >= 1");
    }
  }
  if (ensemble_kind) {
    if (c.modes.empty()) b.error("modes", "must not be empty");
    for (MaskMode m : c.modes) {
      if (m != MaskMode::kPartition) continue;
      for (double s : c.sparsities) {
        if (partition_group_size(s) == 0) {
          b.error("modes", "partition mode needs sparsity = 1 - 1/k for integer k >= 2, got " +
                               std::to_string(s));
        }
      }
      for (Granularity g : c.granularities) {
        if (g == Granularity::kStructured) b.error("modes", "partition mode is unstructured only");
      }
    }
  }
  for (Granularity g : c.granularities) {
    if (g == Granularity::kStructured && c.scope == Scope::kGlobal) {
      b.error("scope", "structured granularity with global scope is unsupported");
    }
  }
  if (stochastic_kind) {
    if (!(c.tau >= 0.0 && c.tau <= 1.0)) b.error("tau", "must lie in [0, 1]");
    if (!(c.exp_k > 0.0)) b.error("exp_k", "must be > 0");
    if (c.anneal_epochs > c.tune.epochs) {
      b.error("anneal_epochs", "exceeds tune.epochs (" + std::to_string(c.anneal_epochs) +
                                   " > " + std::to_string(c.tune.epochs) + ")");
    }
  }
  if (anneal_kind) {
    if (c.inits.empty()) b.error("inits", "must not be empty");
    if (c.anneals.empty()) b.error("anneals", "must not be empty");
    if (!(c.mix_sigma1 >= 0.0 && c.mix_sigma2 >= 0.0)) {
      b.error("mix_sigma1", "mixture standard deviations must be >= 0");
    }
    if (c.pruning_epochs == 0 || c.pruning_epochs > c.tune.epochs) {
      b.error("pruning_epochs", "must lie in [1, tune.epochs]");
    }
    const bool random_init =
        std::find(c.inits.begin(), c.inits.end(), ProbInit::kRandomUniform) != c.inits.end();
    const bool partitioned =
        std::find(c.modes.begin(), c.modes.end(), MaskMode::kPartition) != c.modes.end();
    if (random_init && partitioned) {
      for (double s : c.sparsities) {
        if (partition_group_size(s) != 2) {
          b.error("inits", "random_uniform with partition mode needs sparsity 0.5");
        }
      }
    }
  }
  if (for_kinds({K::kScheduleCompare}) && c.tune_schedules.empty()) {
    b.error("tune_schedules", "must not be empty");
  }
  if (hash_kind) {
    if (c.dir_a.empty()) b.error("dir_a", "required for hash_corpus");
    if (c.dir_b.empty()) b.error("dir_b", "required for hash_corpus");
  }
  if (for_kinds({K::kLandscape})) {
    if (!(c.span > 0.0)) b.error("span", "must be > 0");
    if (c.resolution < 2) b.error("resolution", "must be >= 2");
  }
  return c;
}

}  // namespace

std::vector<std::string> validate_config_text(const std::string& text,
                                              const std::string& origin) {
  std::vector<std::string> errors;
  parse_impl(text, origin, errors);
  return errors;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  std::vector<std::string> errors;
  ExperimentConfig c = parse_impl(text, origin, errors);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parse_config(ss.str(), path.string());
  // Relative paths are taken relative to the config file.
  const auto base = path.parent_path();
  for (std::string* p : {&c.data.path, &c.dir_a, &c.dir_b}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) {
      *p = (base / *p).lexically_normal().string();
    }
  }
  return c;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += f(v[i]);
  }
  return out;
}

void render_train(std::ostringstream& os, const std::string& p, const TrainConfig& t) {
  os << p << ".optimizer = " << to_string(t.optimizer.kind) << '\n'
     << p << ".lr = " << fmt(t.optimizer.learning_rate) << '\n'
     << p << ".momentum = " << fmt(t.optimizer.momentum) << '\n'
     << p << ".epochs = " << t.epochs << '\n'
     << p << ".batch_size = " << t.batch_size << '\n';
  if (t.schedule) {
    const Schedule& s = *t.schedule;
    os << p << ".schedule = " << to_string(s.kind) << '\n'
       << p << ".lr_max = " << fmt(s.lr_max) << '\n'
       << p << ".lr_min = " << fmt(s.lr_min) << '\n'
       << p << ".warm_fraction = " << fmt(s.warm_fraction) << '\n'
       << p << ".breakpoints = " << join(s.breakpoints, fmt) << '\n'
       << p << ".factors = " << join(s.factors, fmt) << '\n';
    if (s.momentum) {
      os << p << ".momentum_max = " << fmt(s.momentum->max) << '\n'
         << p << ".momentum_min = " << fmt(s.momentum->min) << '\n';
    }
  }
}

}  // namespace

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto str = [](auto v) { return to_string(v); };
  auto num = [](std::size_t v) { return std::to_string(v); };
  os << "schema_version = " << c.schema_version << '\n'
     << "kind = " << to_string(c.kind) << '\n'
     << "dataset = " << c.data.source << '\n'
     << "dataset.n = " << c.data.n << '\n'
     << "dataset.noise = " << fmt(c.data.noise) << '\n'
     << "dataset.turns = " << fmt(c.data.turns) << '\n'
     << "dataset.classes = " << c.data.classes << '\n'
     << "dataset.separation = " << fmt(c.data.separation) << '\n'
     << "dataset.sd = " << fmt(c.data.sd) << '\n'
     << "dataset.path = " << c.data.path << '\n'
     << "split = " << fmt(c.data.split[0]) << ", " << fmt(c.data.split[1]) << ", "
     << fmt(c.data.split[2]) << '\n'
     << "model.hidden = " << join(c.model.hidden, num) << '\n'
     << "model.activation = " << to_string(c.model.activation) << '\n';
  render_train(os, "train", c.train);
  render_train(os, "tune", c.tune);
  os << "seeds = " << join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
     << "sigmas = " << join(c.sigmas, fmt) << '\n'
     << "sparsities = " << join(c.sparsities, fmt) << '\n'
     << "noise_mean = " << fmt(c.noise_mean) << '\n'
     << "children = " << c.children << '\n'
     << "scope = " << to_string(c.scope) << '\n'
     << "granularities = " << join(c.granularities, str) << '\n'
     << "members = " << c.members << '\n'
     << "sizes = " << join(c.sizes, num) << '\n'
     << "modes = " << join(c.modes, str) << '\n'
     << "combination = " << to_string(c.combination) << '\n'
     << "include_parent = "
     << (c.include_parent ? (*c.include_parent ? "true" : "false") : "default") << '\n'
     << "population = " << c.population << '\n'
     << "k = " << c.k << '\n'
     << "mirrored = " << (c.mirrored ? "true" : "false") << '\n'
     << "inits = " << join(c.inits, str) << '\n'
     << "anneals = " << join(c.anneals, str) << '\n'
     << "tau = " << fmt(c.tau) << '\n'
     << "variant = " << to_string(c.variant) << '\n'
     << "anneal_epochs = " << c.anneal_epochs << '\n'
     << "exp_k = " << fmt(c.exp_k) << '\n'
     << "mix = " << fmt(c.mix_mu1) << ", " << fmt(c.mix_sigma1) << ", " << fmt(c.mix_mu2)
     << ", " << fmt(c.mix_sigma2) << '\n'
     << "baselines = " << (c.baselines ? "true" : "false") << '\n'
     << "pruning_epochs = " << c.pruning_epochs << '\n'
     << "tune_schedules = " << join(c.tune_schedules, str) << '\n'
     << "kl_target = " << fmt(c.kl_target) << '\n'
     << "samples_per_cell = " << c.samples_per_cell << '\n'
     << "grid_resolution = " << c.grid_resolution << '\n'
     << "ece_bins = " << c.ece_bins << '\n'
     << "dir_a = " << c.dir_a << '\n'
     << "dir_b = " << c.dir_b << '\n'
     << "span = " << fmt(c.span) << '\n'
     << "resolution = " << c.resolution << '\n';
  return os.str();
}

}  // namespace subnet

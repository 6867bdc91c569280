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

#include "subnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "subnet/data_io.hpp"
#include "subnet/diversity.hpp"
#include "subnet/ensemble.hpp"
#include "subnet/errors.hpp"
#include "subnet/numeric.hpp"
#include "subnet/perturb.hpp"
#include "subnet/phash.hpp"
#include "subnet/rng.hpp"
#include "subnet/stochastic.hpp"

namespace subnet {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using K = ExperimentKind;

namespace {

constexpr double kGridLo = -1.5;
constexpr double kGridHi = 1.5;

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_json_line(const ResultRecord& r) {
  json j;
  j["kind"] = r.kind;
  j["seed"] = r.seed;
  j["role"] = r.role;
  j["group"] = r.group;
  j["index"] = r.index;
  json params = json::object();
  for (const auto& [key, value] : r.params) {
    std::visit([&](const auto& v) { params[key] = v; }, value);
  }
  j["params"] = params;
  json metrics = json::object();
  for (const auto& [key, value] : r.metrics) {
    if (std::isfinite(value)) {
      metrics[key] = value;
    } else {
      metrics[key] = nullptr;
    }
  }
  j["metrics"] = metrics;
  return j.dump();
}

ResultRecord parse_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    throw FormatError(std::string("bad result record: ") + e.what());
  }
  ResultRecord r;
  try {
    r.kind = j.at("kind").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.role = j.at("role").get<std::string>();
    r.group = j.at("group").get<std::string>();
    r.index = j.at("index").get<std::int64_t>();
    for (const auto& [key, value] : j.at("params").items()) {
      if (value.is_string()) {
        r.params.emplace_back(key, value.get<std::string>());
      } else if (value.is_number_integer()) {
        r.params.emplace_back(key, value.get<std::int64_t>());
      } else {
        r.params.emplace_back(key, value.get<double>());
      }
    }
    for (const auto& [key, value] : j.at("metrics").items()) {
      r.metrics.emplace_back(key, value.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                  : value.get<double>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad result record: ") + e.what());
  }
  return r;
}

std::vector<TableRow> aggregate(const std::vector<ResultRecord>& records) {
  std::vector<TableRow> rows;
  std::vector<std::vector<double>> values;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> where;
  for (const auto& r : records) {
    for (const auto& [metric, value] : r.metrics) {
      const auto key = std::make_tuple(r.role, r.group, metric);
      auto it = where.find(key);
      if (it == where.end()) {
        it = where.emplace(key, rows.size()).first;
        rows.push_back({r.role, r.group, metric, 0, 0.0, 0.0});
        values.emplace_back();
      }
      if (std::isfinite(value)) values[it->second].push_back(value);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = values[i];
    TableRow& row = rows[i];
    row.n = v.size();
    if (v.empty()) {
      row.mean = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.mean = exact_mean(v);
    if (v.size() > 1) {
      std::vector<double> sq;
      sq.reserve(v.size());
      for (double x : v) sq.push_back((x - row.mean) * (x - row.mean));
      const double var = exact_sum(sq) / static_cast<double>(v.size() - 1);
      row.se = std::sqrt(var / static_cast<double>(v.size()));
    }
  }
  return rows;
}

std::string tables_csv(const std::vector<TableRow>& rows) {
  std::string out = "role,group,metric,n,mean,se\n";
  for (const auto& r : rows) {
    out += r.role + ",\"" + r.group + "\"," + r.metric + "," + std::to_string(r.n) + "," +
           g17(r.mean) + "," + g17(r.se) + "\n";
  }
  return out;
}

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.source == "spiral") return spiral(spec.n, spec.noise, spec.turns, seed);
  if (spec.source == "blobs") {
    return gaussian_blobs(spec.classes, spec.n, spec.separation, seed, spec.sd);
  }
  if (spec.source == "csv") return read_csv(spec.path);
  throw ConfigError("unknown dataset source '" + spec.source + "'");
}

SeedContext prepare_seed(const ExperimentConfig& config, std::uint64_t seed) {
  SeedContext ctx;
  ctx.data = split(make_dataset(config.data, seed), config.data.split, seed);
  std::vector<std::size_t> dims{ctx.data.train.input_dim()};
  dims.insert(dims.end(), config.model.hidden.begin(), config.model.hidden.end());
  dims.push_back(ctx.data.train.class_count);
  TrainConfig tc = config.train;
  tc.seed = seed;
  ctx.parent = train(DenseNet::build(dims, config.model.activation, seed), ctx.data.train, tc).net;
  return ctx;
}

std::vector<std::uint8_t> boundary_pgm(const DenseNet& net, std::size_t resolution) {
  if (resolution < 2) throw ConfigError("boundary resolution must be >= 2");
  if (net.input_dim() != 2) throw ShapeError("boundary maps need a 2-d input");
  const double step = (kGridHi - kGridLo) / static_cast<double>(resolution - 1);
  Matrix grid(resolution * resolution, 2);
  for (std::size_t r = 0; r < resolution; ++r) {
    for (std::size_t c = 0; c < resolution; ++c) {
      grid(r * resolution + c, 0) = kGridLo + step * static_cast<double>(c);
      grid(r * resolution + c, 1) = kGridHi - step * static_cast<double>(r);
    }
  }
  const Matrix logits = forward(net, grid);
  const std::size_t classes = net.output_dim();
  const std::string header =
      "P5\n" + std::to_string(resolution) + " " + std::to_string(resolution) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    const std::size_t cls = argmax(logits.row(i));
    out.push_back(static_cast<std::uint8_t>(classes > 1 ? cls * 255 / (classes - 1) : 0));
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical_text(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct SeedOutput {
  std::vector<ResultRecord> records;
  std::vector<std::pair<std::string, std::string>> files;  // name, bytes
};

class Emitter {
 public:
  Emitter(const ExperimentConfig& config, std::uint64_t seed, bool first)
      : config_(config), seed_(seed), first_(first) {}

  ResultRecord& add(std::string role, std::string group, std::int64_t index = -1) {
    ResultRecord r;
    r.kind = to_string(config_.kind);
    r.seed = seed_;
    r.role = std::move(role);
    r.group = std::move(group);
    r.index = index;
    out_.records.push_back(std::move(r));
    return out_.records.back();
  }

  void file(std::string name, std::string bytes) {
    if (first_) out_.files.emplace_back(std::move(name), std::move(bytes));
  }

  bool first() const { return first_; }
  std::uint64_t seed() const { return seed_; }
  SeedOutput take() { return std::move(out_); }

 private:
  const ExperimentConfig& config_;
  std::uint64_t seed_;
  bool first_;
  SeedOutput out_;
};

void put(ResultRecord& r, const Metrics& m) {
  r.metrics.emplace_back("accuracy", m.accuracy);
  r.metrics.emplace_back("nll", m.nll);
  r.metrics.emplace_back("ece", m.ece);
}

Metrics test_metrics(const DenseNet& net, const Dataset& test, std::size_t bins) {
  return evaluate(PredictionSet{predict_proba(net, test.inputs), test.labels}, bins);
}

std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += g17(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string bytes(const std::vector<std::uint8_t>& v) { return std::string(v.begin(), v.end()); }

std::string cell(double sigma, double sparsity) {
  return "sigma=" + num(sigma) + ",sparsity=" + num(sparsity);
}

void emit_parent(Emitter& e, const SeedContext& ctx, const ExperimentConfig& c) {
  auto& r = e.add("parent", "parent");
  put(r, test_metrics(ctx.parent, ctx.data.test, c.ece_bins));
}

// Children W + N o M shared across cells through common seeds.
ChildNetwork noisy_child(const DenseNet& parent, const ExperimentConfig& c, double sigma,
                         double sparsity, std::uint64_t seed, std::size_t index) {
  const std::uint64_t cseed = derive_seed(seed, Stream::kMember, index);
  const NetMask mask = sample_mask(
      {sparsity, Granularity::kUnstructured, c.scope, cseed}, parent.shape());
  return mutate(parent, mask, {c.noise_mean, sigma, derive_seed(cseed, Stream::kNoise)});
}

void emit_child(Emitter& e, const std::string& group, std::size_t i, const DenseNet& net,
                const Matrix& parent_probs, const Dataset& test, const ExperimentConfig& c,
                double sigma, double sparsity) {
  const Matrix probs = predict_proba(net, test.inputs);
  auto& r = e.add("child", group, static_cast<std::int64_t>(i));
  r.params = {{"sigma", sigma}, {"sparsity", sparsity}, {"noise_mean", c.noise_mean}};
  put(r, evaluate(PredictionSet{probs, test.labels}, c.ece_bins));
  r.metrics.emplace_back("kl", mean_kl(parent_probs, probs));
}

void run_decision_boundary(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  e.file("boundary_parent.pgm", bytes(boundary_pgm(ctx.parent, c.grid_resolution)));
  const Matrix parent_probs = predict_proba(ctx.parent, ctx.data.test.inputs);
  std::size_t cell_index = 0;
  for (double sigma : c.sigmas) {
    for (double sp : c.sparsities) {
      const std::string group = cell(sigma, sp);
      for (std::size_t i = 0; i < c.children; ++i) {
        const ChildNetwork child = noisy_child(ctx.parent, c, sigma, sp, e.seed(), i);
        emit_child(e, group, i, child.net, parent_probs, ctx.data.test, c, sigma, sp);
        if (i == 0) {
          e.file("boundary_sigma" + num(sigma) + "_sparsity" + num(sp) + ".pgm",
                 bytes(boundary_pgm(child.net, c.grid_resolution)));
        }
      }
      NoisyConfig nc;
      nc.population = c.population;
      nc.k = c.k;
      nc.sparsity = sp;
      nc.scope = c.scope;
      nc.noise_mean = c.noise_mean;
      nc.sigma = sigma;
      nc.mirrored = c.mirrored;
      nc.combination = c.combination;
      nc.include_parent = c.include_parent.value_or(true);
      nc.seed = derive_seed(e.seed(), Stream::kMember, 1000 + cell_index++);
      const EnsembleResult res = run_noisy(ctx.parent, ctx.data, nc);
      auto& r = e.add("ensemble", group);
      r.params = {{"sigma", sigma},
                  {"sparsity", sp},
                  {"population", static_cast<std::int64_t>(nc.population)},
                  {"k", static_cast<std::int64_t>(nc.k)},
                  {"mirrored", std::string(nc.mirrored ? "true" : "false")},
                  {"combination", to_string(nc.combination)}};
      put(r, res.ensemble);
    }
  }
}

void run_kl_ablation(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  const Matrix parent_probs = predict_proba(ctx.parent, ctx.data.test.inputs);
  for (double sigma : c.sigmas) {
    for (double sp : c.sparsities) {
      for (std::size_t i = 0; i < c.children; ++i) {
        const ChildNetwork child = noisy_child(ctx.parent, c, sigma, sp, e.seed(), i);
        emit_child(e, cell(sigma, sp), i, child.net, parent_probs, ctx.data.test, c, sigma, sp);
      }
    }
  }
  TrustRegionSpec spec;
  spec.sigmas = c.sigmas;
  spec.sparsities = c.sparsities;
  std::sort(spec.sigmas.begin(), spec.sigmas.end());
  std::sort(spec.sparsities.begin(), spec.sparsities.end());
  spec.kl_target = c.kl_target;
  spec.noise_mean = c.noise_mean;
  spec.samples_per_cell = c.samples_per_cell;
  spec.scope = c.scope;
  spec.seed = e.seed();
  const TrustRegionResult tr = trust_region_search(ctx.parent, ctx.data.validation, spec);
  auto& r = e.add("trust_region", "best");
  r.params = {{"kl_target", c.kl_target}};
  r.metrics = {{"sigma", tr.best.sigma},
               {"sparsity", tr.best.sparsity},
               {"mean_kl", tr.best.mean_kl},
               {"mean_accuracy", tr.best.mean_accuracy},
               {"within_target", tr.within_target ? 1.0 : 0.0}};
}

void emit_ensemble(Emitter& e, const std::string& group,
                   const std::vector<std::pair<std::string, ParamValue>>& params,
                   const EnsembleResult& res) {
  for (std::size_t i = 0; i < res.members.size(); ++i) {
    auto& r = e.add("member", group, static_cast<std::int64_t>(i));
    r.params = params;
    r.params.emplace_back("method", res.members[i].lineage.method);
    put(r, res.members[i].test);
    r.metrics.emplace_back("fitness", res.members[i].fitness);
  }
  auto& r = e.add("ensemble", group);
  r.params = params;
  put(r, res.ensemble);
  r.metrics.emplace_back("gain", res.ensemble.accuracy - res.parent.accuracy);
}

SparseConfig sparse_config(const ExperimentConfig& c, std::uint64_t seed, double sp,
                           Granularity g, MaskMode mode, std::size_t members) {
  SparseConfig sc;
  sc.members = members;
  sc.sparsity = sp;
  sc.granularity = g;
  sc.scope = c.scope;
  sc.mode = mode;
  sc.tune = c.tune;
  sc.combination = c.combination;
  sc.include_parent = c.include_parent.value_or(false);
  sc.seed = seed;
  return sc;
}

std::vector<std::pair<std::string, ParamValue>> sparse_params(const SparseConfig& sc) {
  return {{"sparsity", sc.sparsity},
          {"granularity", to_string(sc.granularity)},
          {"scope", to_string(sc.scope)},
          {"mode", to_string(sc.mode)},
          {"members", static_cast<std::int64_t>(sc.members)},
          {"combination", to_string(sc.combination)},
          {"include_parent", std::string(sc.include_parent ? "true" : "false")},
          {"tune_epochs", static_cast<std::int64_t>(sc.tune.epochs)},
          {"tune_schedule",
           sc.tune.schedule ? to_string(sc.tune.schedule->kind) : std::string("none")}};
}

void run_sparse_grid(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  for (double sp : c.sparsities) {
    for (Granularity g : c.granularities) {
      for (MaskMode mode : c.modes) {
        const SparseConfig sc = sparse_config(c, e.seed(), sp, g, mode, c.members);
        const std::string group = "sparsity=" + num(sp) + ",granularity=" + to_string(g) +
                                  ",mode=" + to_string(mode);
        emit_ensemble(e, group, sparse_params(sc), run_sparse(ctx.parent, ctx.data, sc));
      }
    }
  }
}

void run_ensemble_size(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  const std::size_t largest = *std::max_element(c.sizes.begin(), c.sizes.end());
  for (double sp : c.sparsities) {
    for (Granularity g : c.granularities) {
      for (MaskMode mode : c.modes) {
        const SparseConfig sc = sparse_config(c, e.seed(), sp, g, mode, largest);
        const EnsembleResult res = run_sparse(ctx.parent, ctx.data, sc);
        const std::string base = "sparsity=" + num(sp) + ",granularity=" + to_string(g) +
                                 ",mode=" + to_string(mode);
        for (std::size_t i = 0; i < res.members.size(); ++i) {
          auto& r = e.add("member", base, static_cast<std::int64_t>(i));
          r.params = sparse_params(sc);
          put(r, res.members[i].test);
        }
        // Smaller ensembles are prefixes of the largest one.
        for (std::size_t m : c.sizes) {
          EnsembleRecord rec = res.record;
          rec.members.resize(m);
          auto& r = e.add("ensemble", "size=" + std::to_string(m) + "," + base);
          r.params = sparse_params(sc);
          r.params.emplace_back("size", static_cast<std::int64_t>(m));
          put(r, evaluate(rec, ctx.data.test));
        }
      }
    }
  }
}

void emit_single(Emitter& e, const std::string& group,
                 const std::vector<std::pair<std::string, ParamValue>>& params,
                 const DenseNet& net, const Dataset& test, std::size_t bins) {
  auto& r = e.add("member", group, 0);
  r.params = params;
  put(r, test_metrics(net, test, bins));
}

void run_anneal_ablation(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  for (double sp : c.sparsities) {
    const std::string tail = ",sparsity=" + num(sp);
    for (MaskMode mode : c.modes) {
      StochasticConfig sc;
      sc.members = c.members;
      sc.sparsity = sp;
      sc.scope = c.scope;
      sc.mode = mode;
      sc.tau = c.tau;
      sc.variant = c.variant;
      sc.mix_mu1 = c.mix_mu1;
      sc.mix_sigma1 = c.mix_sigma1;
      sc.mix_mu2 = c.mix_mu2;
      sc.mix_sigma2 = c.mix_sigma2;
      sc.anneal_epochs = c.anneal_epochs;
      sc.exp_k = c.exp_k;
      sc.tune = c.tune;
      sc.combination = c.combination;
      sc.include_parent = c.include_parent.value_or(false);
      sc.seed = e.seed();
      auto params = [&](const StochasticConfig& s, const std::string& method) {
        std::vector<std::pair<std::string, ParamValue>> p{
            {"method", method},
            {"sparsity", s.sparsity},
            {"mode", to_string(s.mode)},
            {"init", to_string(s.init)},
            {"anneal", to_string(s.anneal)},
            {"anneal_epochs", static_cast<std::int64_t>(s.anneal_epochs)},
            {"tau", s.tau},
            {"tune_epochs", static_cast<std::int64_t>(s.tune.epochs)}};
        return p;
      };
      for (ProbInit init : c.inits) {
        for (AnnealKind anneal : c.anneals) {
          sc.init = init;
          sc.anneal = anneal;
          const std::string group = "method=anneal,init=" + to_string(init) +
                                    ",anneal=" + to_string(anneal) + ",mode=" +
                                    to_string(mode) + tail;
          emit_ensemble(e, group, params(sc, "anneal"), run_stochastic(ctx.parent, ctx.data, sc));
        }
      }
      if (c.baselines) {
        StochasticConfig one = sc;
        one.init = ProbInit::kTemperature;
        one.anneal_epochs = 0;
        emit_ensemble(e, "method=one_shot,mode=" + to_string(mode) + tail,
                      params(one, "one_shot"), run_stochastic(ctx.parent, ctx.data, one));
      }
    }
    if (!c.baselines) continue;
    const std::vector<std::pair<std::string, ParamValue>> base{
        {"sparsity", sp}, {"tune_epochs", static_cast<std::int64_t>(c.tune.epochs)}};
    {
      ChildNetwork child = prune(ctx.parent, magnitude_mask(ctx.parent, sp, c.scope));
      TrainConfig tc = c.tune;
      tc.seed = derive_seed(e.seed(), Stream::kTune, 0);
      tune(child, ctx.data.train, tc);
      auto p = base;
      p.emplace_back("method", std::string("magnitude"));
      emit_single(e, "method=magnitude" + tail, p, child.net, ctx.data.test, c.ece_bins);
    }
    for (PruneCriterion crit : {PruneCriterion::kMagnitude, PruneCriterion::kRandom}) {
      IterativePruneConfig ic;
      ic.final_sparsity = sp;
      ic.pruning_epochs = c.pruning_epochs;
      ic.criterion = crit;
      ic.scope = c.scope;
      ic.seed = e.seed();
      ic.tune = c.tune;
      ic.tune.seed = derive_seed(e.seed(), Stream::kTune, 0);
      const IterativePruneResult res = iterative_prune_tune(ctx.parent, ctx.data.train, ic);
      const std::string method = "iterative_" + to_string(crit);
      auto p = base;
      p.emplace_back("method", method);
      p.emplace_back("pruning_epochs", static_cast<std::int64_t>(c.pruning_epochs));
      emit_single(e, "method=" + method + tail, p, res.child.net, ctx.data.test, c.ece_bins);
    }
  }
}

TrainConfig tune_variant(const TrainConfig& base, ScheduleKind kind) {
  TrainConfig tc = base;
  const double lr = base.optimizer.learning_rate;
  const double peak = base.schedule ? base.schedule->lr_max : lr;
  const double floor = base.schedule ? base.schedule->lr_min : 0.0;
  switch (kind) {
    case ScheduleKind::kConstant: tc.schedule = Schedule::constant(lr); break;
    case ScheduleKind::kOneCycle:
      tc.schedule = base.schedule && base.schedule->kind == ScheduleKind::kOneCycle
                        ? *base.schedule
                        : Schedule::one_cycle(lr, std::max(peak, lr), floor, 0.3);
      break;
    case ScheduleKind::kCosine: tc.schedule = Schedule::cosine(peak, floor); break;
    case ScheduleKind::kLinearDecay:
      tc.schedule = Schedule::linear_decay(peak, floor, 0.5, 1.0);
      break;
    case ScheduleKind::kStepDecay:
      tc.schedule = Schedule::step_decay(peak, {0.5, 0.75}, {0.1, 0.01});
      break;
  }
  return tc;
}

void run_schedule_compare(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  for (double sp : c.sparsities) {
    for (Granularity g : c.granularities) {
      for (MaskMode mode : c.modes) {
        for (ScheduleKind kind : c.tune_schedules) {
          SparseConfig sc = sparse_config(c, e.seed(), sp, g, mode, c.members);
          sc.tune = tune_variant(c.tune, kind);
          const std::string group = "mode=" + to_string(mode) + ",schedule=" + to_string(kind) +
                                    ",sparsity=" + num(sp) + ",granularity=" + to_string(g);
          emit_ensemble(e, group, sparse_params(sc), run_sparse(ctx.parent, ctx.data, sc));
        }
      }
    }
  }
}

void run_diversity(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  const double sp = c.sparsities.front();
  const MaskMode mode = partition_group_size(sp) ? MaskMode::kPartition : MaskMode::kRandom;

  std::vector<std::pair<std::string, EnsembleResult>> methods;
  {
    SparseConfig sc = sparse_config(c, e.seed(), sp, Granularity::kUnstructured, mode, c.members);
    sc.include_parent = false;
    methods.emplace_back("sparse", run_sparse(ctx.parent, ctx.data, sc));
  }
  {
    NoisyConfig nc;
    nc.population = c.members;
    nc.k = c.members;
    nc.sparsity = sp;
    nc.scope = c.scope;
    nc.noise_mean = c.noise_mean;
    nc.sigma = c.sigmas.front();
    nc.mirrored = c.mirrored;
    nc.include_parent = false;
    nc.seed = e.seed();
    methods.emplace_back("noisy", run_noisy(ctx.parent, ctx.data, nc));
  }
  {
    StochasticConfig st;
    st.members = c.members;
    st.sparsity = sp;
    st.scope = c.scope;
    st.mode = MaskMode::kRandom;
    st.tau = c.tau;
    st.variant = c.variant;
    st.anneal_epochs = c.anneal_epochs;
    st.exp_k = c.exp_k;
    st.tune = c.tune;
    st.seed = e.seed();
    methods.emplace_back("stochastic", run_stochastic(ctx.parent, ctx.data, st));
  }
  for (const auto& [name, res] : methods) {
    const std::vector<std::pair<std::string, ParamValue>> params{
        {"method", name}, {"sparsity", sp}, {"members", static_cast<std::int64_t>(c.members)}};
    emit_ensemble(e, "method=" + name, params, res);
    const std::vector<Matrix> probs = member_probabilities(res.record, ctx.data.test.inputs);
    const DiversityReport d = diversity_report(probs);
    auto& r = e.add("diversity", "method=" + name);
    r.params = params;
    r.metrics = {{"correlation", d.mean_correlation},
                 {"kl", d.mean_kl},
                 {"pdr", d.mean_pdr},
                 {"flagged_pairs", static_cast<double>(d.flagged.size())}};
    e.file("diversity_" + name + "_correlation.csv", matrix_csv(d.correlation));
    e.file("diversity_" + name + "_kl.csv", matrix_csv(d.kl));
    e.file("diversity_" + name + "_pdr.csv", matrix_csv(d.pdr));
  }
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

void run_landscape(Emitter& e, const ExperimentConfig& c, const SeedContext& ctx) {
  emit_parent(e, ctx, c);
  const double sp = c.sparsities.front();
  const Granularity g = c.granularities.front();
  const SparseConfig sc = sparse_config(c, e.seed(), sp, g, MaskMode::kRandom, 1);
  const EnsembleResult res = run_sparse(ctx.parent, ctx.data, sc);
  const ChildNetwork& child = res.record.members.front();
  emit_single(e, "child", sparse_params(sc), child.net, ctx.data.test, c.ece_bins);

  const std::vector<double> axis = linspace(-c.span, c.span, c.resolution);
  const std::size_t mid = c.resolution / 2;
  for (const auto& [name, net] :
       {std::pair<std::string, const DenseNet*>{"parent", &ctx.parent}, {"child", &child.net}}) {
    const auto [delta, eta] = random_directions(*net, derive_seed(e.seed(), Stream::kDirection));
    const Matrix slice = landscape_slice(*net, ctx.data.test, delta, eta, axis, axis);
    const auto& v = slice.data();
    auto& r = e.add("landscape", name);
    r.params = {{"span", c.span}, {"resolution", static_cast<std::int64_t>(c.resolution)}};
    r.metrics = {{"center_loss", slice(mid, mid)},
                 {"min_loss", *std::min_element(v.begin(), v.end())},
                 {"max_loss", *std::max_element(v.begin(), v.end())},
                 {"mean_loss", exact_mean(v)}};
    e.file("landscape_" + name + ".csv", matrix_csv(slice));
  }
  e.file("parent.snfe", bytes(encode_model(ctx.parent)));
  e.file("child.snfe", bytes(encode_model(child.net, &child.retained)));
  std::ostringstream csv;
  const Dataset& t = ctx.data.test;
  for (std::size_t j = 0; j < t.input_dim(); ++j) csv << "x" << j << ",";
  csv << "label\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.input_dim(); ++j) csv << g17(t.inputs(i, j)) << ",";
    csv << t.labels[i] << "\n";
  }
  e.file("test.csv", csv.str());
}

SeedOutput run_seed(const ExperimentConfig& c, std::uint64_t seed, bool first) {
  Emitter e(c, seed, first);
  const SeedContext ctx = prepare_seed(c, seed);
  switch (c.kind) {
    case K::kDecisionBoundary: run_decision_boundary(e, c, ctx); break;
    case K::kKlAblation: run_kl_ablation(e, c, ctx); break;
    case K::kSparsityAblation:
    case K::kStructureAblation: run_sparse_grid(e, c, ctx); break;
    case K::kEnsembleSize: run_ensemble_size(e, c, ctx); break;
    case K::kAnnealAblation: run_anneal_ablation(e, c, ctx); break;
    case K::kScheduleCompare: run_schedule_compare(e, c, ctx); break;
    case K::kDiversityReport: run_diversity(e, c, ctx); break;
    case K::kLandscape: run_landscape(e, c, ctx); break;
    case K::kHashCorpus: break;
  }
  return e.take();
}

SeedOutput run_hash_corpus(const ExperimentConfig& c, std::uint64_t seed) {
  Emitter e(c, seed, true);
  const CorpusReport report = corpus_report(c.dir_a, c.dir_b);
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const CorpusPair& p = report.pairs[i];
    auto& r = e.add("pair", "corpus", static_cast<std::int64_t>(i));
    r.params = {{"file", p.name}};
    for (std::size_t a = 0; a < kAllHashes.size(); ++a) {
      r.metrics.emplace_back(to_string(kAllHashes[a]), static_cast<double>(p.distance[a]));
    }
    r.metrics.emplace_back("rmse", p.rmse);
  }
  for (const auto& name : report.unmatched) {
    auto& r = e.add("unmatched", "corpus");
    r.params = {{"file", name}};
  }
  e.file("corpus.csv", report.to_csv());
  return e.take();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void check_target(const fs::path& out) {
  if (fs::exists(out) && !fs::exists(out / "manifest.json")) {
    throw std::runtime_error("refusing to replace " + out.string() +
                             ": it exists and holds no previous run");
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config_in, const fs::path& out,
                          const RunOptions& options) {
  ExperimentConfig config = config_in;
  if (options.seeds) config.seeds = *options.seeds;
  if (config.seeds.empty()) throw ConfigError("no seeds to run");
  check_target(out);
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::vector<SeedOutput> outputs;
  if (config.kind == K::kHashCorpus) {
    outputs.push_back(run_hash_corpus(config, config.seeds.front()));
  } else {
    const std::size_t n = config.seeds.size();
    outputs.resize(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          outputs[i] = run_seed(config, config.seeds[i], i == 0);
          std::lock_guard lock(log_mutex);
          log("seed " + std::to_string(config.seeds[i]) + ": " +
              std::to_string(outputs[i].records.size()) + " records");
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, n);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  std::string jsonl;
  std::vector<std::pair<std::string, std::string>> files;
  for (auto& o : outputs) {
    for (const auto& r : o.records) jsonl += to_json_line(r) + "\n";
    for (auto& f : o.files) files.push_back(std::move(f));
  }
  // Tables come from the serialized records so they can be rebuilt from
  // results.jsonl alone.
  std::vector<ResultRecord> reparsed;
  {
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) reparsed.push_back(parse_json_line(line));
  }
  files.emplace_back("results.jsonl", jsonl);
  files.emplace_back("tables.csv", tables_csv(aggregate(reparsed)));
  files.emplace_back("config.txt", canonical_text(config));

  RunSummary summary;
  summary.records = reparsed.size();
  for (const auto& f : files) summary.files.push_back(f.first);
  summary.files.push_back("manifest.json");
  std::sort(summary.files.begin(), summary.files.end());

  json manifest;
  manifest["library"] = "subnet";
  manifest["version"] = SUBNET_VERSION;
  manifest["schema_version"] = config.schema_version;
  manifest["kind"] = to_string(config.kind);
  manifest["config_hash"] = config_hash(config);
  manifest["seeds"] = config.seeds;
  manifest["records"] = summary.records;
  manifest["files"] = summary.files;
  files.emplace_back("manifest.json", manifest.dump(2) + "\n");

  const fs::path target = fs::absolute(out).lexically_normal();
  const fs::path temp = target.parent_path() / ("." + target.filename().string() + ".partial");
  fs::create_directories(target.parent_path());
  fs::remove_all(temp);
  fs::create_directory(temp);
  try {
    for (const auto& [name, data] : files) write_file(temp / name, data);
    check_target(target);
    fs::remove_all(target);
    fs::rename(temp, target);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(temp, ec);
    throw;
  }
  log("wrote " + std::to_string(summary.records) + " records to " + target.string());
  return summary;
}

}  // namespace subnet

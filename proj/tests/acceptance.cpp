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

// Acceptance run: one PASS/FAIL line per criterion. Exits 0 once every line
// is printed; the lines are the result.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "images.hpp"
#include "oracles.hpp"
#include "subnet/config.hpp"
#include "subnet/data_io.hpp"
#include "subnet/diversity.hpp"
#include "subnet/ensemble.hpp"
#include "subnet/experiments.hpp"
#include "subnet/masking.hpp"
#include "subnet/numeric.hpp"
#include "subnet/perturb.hpp"
#include "subnet/phash.hpp"
#include "subnet/schedules.hpp"
#include "subnet/stochastic.hpp"
#include "support.hpp"

namespace subnet {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SeedContext spiral_seed(std::uint64_t seed) { return testing::spiral_context(seed); }

double test_accuracy(const DenseNet& net, const Dataset& d) {
  return accuracy_of(forward(net, d.inputs), d.labels);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = mean_of(ra), mb = mean_of(rb);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TrainConfig tuning(std::size_t epochs) {
  TrainConfig tc = default_tune_config();
  tc.epochs = epochs;
  return tc;
}

Outcome c1() {
  std::vector<double> sparse, dense;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SeedContext ctx = spiral_seed(s);
    for (std::size_t c = 0; c < 4; ++c) {
      const std::uint64_t seed = derive_seed(s, Stream::kMember, c);
      for (double sp : {0.9, 0.0}) {
        const NetMask m = sample_mask({sp, Granularity::kUnstructured, Scope::kLayerwise, seed},
                                      ctx.parent.shape());
        const ChildNetwork child =
            mutate(ctx.parent, m, {0.0, 0.25, derive_seed(seed, Stream::kNoise)});
        (sp > 0.5 ? sparse : dense).push_back(test_accuracy(child.net, ctx.data.test));
      }
    }
  }
  const double gap = mean_of(sparse) - mean_of(dense);
  return {gap >= 0.10, fmt("sparsity 0.9: %.4f, sparsity 0.0: %.4f, gap %.4f (need >= 0.10)",
                           mean_of(sparse), mean_of(dense), gap)};
}

Outcome c2() {
  const SeedContext ctx = spiral_seed(0);
  const std::vector<double> sigmas{0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2};
  const Matrix ref = predict_proba(ctx.parent, ctx.data.test.inputs);
  std::vector<double> kls;
  for (std::size_t g = 0; g < sigmas.size(); ++g) {
    double kl = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
      const std::uint64_t seed = derive_seed(g, Stream::kMember, c);
      const NetMask m = sample_mask({0.5, Granularity::kUnstructured, Scope::kLayerwise, seed},
                                    ctx.parent.shape());
      const ChildNetwork child =
          mutate(ctx.parent, m, {0.0, sigmas[g], derive_seed(seed, Stream::kNoise)});
      kl += mean_kl(ref, predict_proba(child.net, ctx.data.test.inputs)) / 10.0;
    }
    kls.push_back(kl);
  }
  const double rho = spearman(sigmas, kls);
  return {rho > 0.95, fmt("Spearman rho %.4f (need > 0.95); KL %.2e .. %.2e", rho, kls.front(),
                          kls.back())};
}

Outcome c3() {
  Rng rng(3);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    NetShape shape;
    const std::size_t layers = 1 + rng.below(3);
    for (std::size_t l = 0; l < layers; ++l) shape.push_back({1 + rng.below(12), 1 + rng.below(12)});
    const std::size_t k = 2 + rng.below(7);
    const auto parts = partition(k, shape, rng.next_u64());
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t i = 0; i < shape[l].size(); ++i) {
        int sum = 0;
        for (const auto& p : parts) sum += p.layers[l].bits[i];
        bad += sum != 1;
      }
    }
    const auto pair = partition(2, shape, rng.next_u64());
    bad += total_distance(pair) != 2.0 * std::sqrt(static_cast<double>(total_size(shape)));
  }
  return {bad == 0, fmt("%zu violations over 1000 triples", bad)};
}

Outcome c4() {
  Rng rng(4);
  std::size_t exact = 0;
  double worst_ulps = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const DenseNet parent = testing::random_net({2, 1 + rng.below(32), 1 + rng.below(32), 2},
                                                Activation::kRelu, rng.next_u64());
    const NetMask m = sample_mask(
        {rng.uniform(0.1, 0.9), Granularity::kUnstructured, Scope::kLayerwise, rng.next_u64()},
        parent.shape());
    const auto kids = mirrored_quad(parent, m, {0.0, rng.uniform(0.01, 0.5), rng.next_u64()});
    bool same = true;
    for (std::size_t l = 0; l < parent.depth(); ++l) {
      const auto& w = parent.layer(l).weights.data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        std::array<double, 4> v{};
        for (std::size_t c = 0; c < 4; ++c) v[c] = kids[c].net.layer(l).weights.data()[i];
        const double mean = exact_mean(v);
        if (mean != w[i]) {
          same = false;
          const double ulp = std::nextafter(std::abs(w[i]), INFINITY) - std::abs(w[i]);
          worst_ulps = std::max(worst_ulps, std::abs(mean - w[i]) / ulp);
        }
      }
      const auto& b = parent.layer(l).bias;
      for (std::size_t i = 0; i < b.size(); ++i) {
        std::array<double, 4> v{};
        for (std::size_t c = 0; c < 4; ++c) v[c] = kids[c].net.layer(l).bias[i];
        same = same && exact_mean(v) == b[i];
      }
    }
    exact += same;
  }
  return {exact == 100, fmt("%zu/100 cases bit-exact; worst deviation %.3g ulp of the weight",
                            exact, worst_ulps)};
}

Outcome c5() {
  double worst_backward = 0.0, worst_saliency = 0.0;
  const Activation acts[] = {Activation::kTanh, Activation::kRelu, Activation::kIdentity};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(500 + seed);
    std::vector<std::size_t> dims{1 + rng.below(4)};
    const std::size_t hidden = 1 + rng.below(2);
    for (std::size_t h = 0; h < hidden; ++h) dims.push_back(2 + rng.below(12));
    dims.push_back(2 + rng.below(3));
    const DenseNet net = testing::random_net(dims, acts[seed % 3], rng.next_u64());
    const Dataset d = testing::random_dataset(6, dims.front(), dims.back(), rng.next_u64());
    worst_backward = std::max(
        worst_backward, testing::max_rel_error(backward(net, d.inputs, d.labels).grad,
                                               testing::fd_gradient(net, d.inputs, d.labels)));
    // Saliency on a tanh copy, away from relu kinks.
    const DenseNet smooth = testing::random_net(dims, Activation::kTanh, rng.next_u64());
    std::vector<double> x(dims.front());
    for (double& v : x) v = rng.uniform(-1, 1);
    const auto g = saliency(smooth, x);
    const std::size_t in = x.size();
    const std::size_t cls = argmax(forward(smooth, Matrix(1, in, x)).row(0));
    for (std::size_t i = 0; i < in; ++i) {
      const double h = 1e-6;
      std::vector<double> up = x, down = x;
      up[i] += h;
      down[i] -= h;
      const double fd = (forward(smooth, Matrix(1, in, up))(0, cls) -
                         forward(smooth, Matrix(1, in, down))(0, cls)) / (2 * h);
      worst_saliency = std::max(
          worst_saliency, std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-5}));
    }
  }
  return {worst_backward < 1e-4 && worst_saliency < 1e-4,
          fmt("worst relative error: backward %.2e, saliency %.2e (need < 1e-4)", worst_backward,
              worst_saliency)};
}

Outcome c6() {
  Rng rng(6);
  double worst = 0.0;
  std::size_t pdr_mismatch = 0;
  auto diff = [](double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return 0.0;
    return std::abs(a - b);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200), k = 2 + rng.below(6);
    const Matrix p = testing::random_probs(n, k, rng);
    const Matrix q = testing::random_probs(n, k, rng);
    const auto y = testing::random_labels(n, k, rng);
    const std::size_t bins = 1 + rng.below(20);
    const PredictionSet ps{p, y};
    worst = std::max({worst, diff(ece(ps, bins), oracle::ece(p, y, bins)),
                      diff(nll(ps), oracle::nll(p, y)), diff(mean_kl(p, q), oracle::mean_kl(p, q)),
                      diff(pairwise_correlation(p, q), oracle::correlation(p, q))});
    pdr_mismatch += prediction_disagreement(p, q) != oracle::pdr(p, q);
  }
  return {worst <= 1e-12 && pdr_mismatch == 0,
          fmt("worst |library - oracle| %.2e (need <= 1e-12); PDR mismatches %zu", worst,
              pdr_mismatch)};
}

Outcome c7() {
  std::vector<double> annealed, one_shot, diffs;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SeedContext ctx = spiral_seed(s);
    StochasticConfig c;
    c.members = 1;
    c.sparsity = 0.95;
    c.tau = 0.5;
    c.anneal_epochs = 5;
    c.tune = tuning(20);
    c.seed = s;
    const double a = run_stochastic(ctx.parent, ctx.data, c).members[0].test.accuracy;
    c.anneal_epochs = 0;
    const double o = run_stochastic(ctx.parent, ctx.data, c).members[0].test.accuracy;
    annealed.push_back(a);
    one_shot.push_back(o);
    diffs.push_back(a - o);
  }
  // One-sided 90% t quantile, 9 degrees of freedom.
  const double lower = mean_of(diffs) - 1.383 * se_of(diffs);
  return {mean_of(annealed) >= mean_of(one_shot) && lower >= 0.0,
          fmt("annealed %.4f, one-shot %.4f, paired diff %.4f, 90%% lower bound %.4f",
              mean_of(annealed), mean_of(one_shot), mean_of(diffs), lower)};
}

SparseConfig partition_config(std::size_t members, std::uint64_t seed) {
  SparseConfig c;
  c.members = members;
  c.sparsity = 0.5;
  c.mode = MaskMode::kPartition;
  c.tune = tuning(3);
  c.seed = seed;
  return c;
}

Outcome c8() {
  std::size_t wins = 0;
  std::string gaps;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SeedContext ctx = spiral_seed(s);
    const auto r = run_sparse(ctx.parent, ctx.data, partition_config(8, s));
    wins += r.ensemble.accuracy >= r.parent.accuracy;
    gaps += fmt(" %+.3f", r.ensemble.accuracy - r.parent.accuracy);
  }
  return {wins >= 8, fmt("ensemble >= parent in %zu/10 seeds (need >= 8); gaps", wins) + gaps};
}

Outcome c9() {
  const std::array<std::size_t, 4> sizes{4, 8, 16, 32};
  std::array<std::vector<double>, 4> acc;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SeedContext ctx = spiral_seed(s);
    const auto r = run_sparse(ctx.parent, ctx.data, partition_config(32, s));
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      EnsembleRecord rec = r.record;
      rec.members.resize(sizes[k]);
      acc[k].push_back(evaluate(rec, ctx.data.test).accuracy);
    }
  }
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    detail += fmt("%sM=%zu %.4f+-%.4f", k ? " " : "", sizes[k], mean_of(acc[k]), se_of(acc[k]));
    if (k > 0) ok = ok && mean_of(acc[k]) >= mean_of(acc[k - 1]) - se_of(acc[k - 1]);
  }
  return {ok, detail};
}

Outcome c10() {
  std::vector<std::string> failed;
  const Schedule oc = Schedule::one_cycle(0.001, 0.1, 1e-7, 0.3, 1000);
  if (std::abs(lr_at(oc, 0) - 0.001) > 1e-15 || std::abs(lr_at(oc, 300) - 0.1) > 1e-15 ||
      std::abs(lr_at(oc, 1000) - 1e-7) > 1e-15) {
    failed.push_back("one_cycle anchors");
  }
  for (auto kind : {AnnealKind::kLinear, AnnealKind::kCosine, AnnealKind::kExponential}) {
    // The exponential shape never reaches 0; anneal_at snaps it at the end.
    if (std::abs(anneal_decay(kind, 0.0, 5.0) - 1.0) > 1e-15 ||
        (kind != AnnealKind::kExponential && std::abs(anneal_decay(kind, 1.0, 5.0)) > 1e-15)) {
      failed.push_back(to_string(kind) + " decay endpoints");
    }
    ProbMask pm = init_random(0.5, {{24, 24}, {3, 24}}, 10);
    pm.anneal = kind;
    pm.anneal_epochs = 5;
    const auto start = anneal_at(pm, 0), end = anneal_at(pm, 5);
    for (std::size_t l = 0; l < end.size(); ++l) {
      for (std::size_t i = 0; i < end[l].size(); ++i) {
        if (std::abs(start[l].data()[i] - pm.initial[l].data()[i]) > 1e-15 ||
            std::abs(end[l].data()[i] - pm.target.layers[l].bits[i]) > 1e-15) {
          failed.push_back(to_string(kind) + " mask endpoints");
          l = end.size() - 1;
          break;
        }
      }
    }
  }
  const DenseNet parent = testing::random_net({2, 16, 16, 3}, Activation::kRelu, 10);
  const Dataset train = testing::random_dataset(160, 2, 3, 11);
  TrainConfig tc = tuning(4);
  tc.batch_size = 16;
  const NetMask target = sample_mask({0.8, Granularity::kUnstructured, Scope::kLayerwise, 12},
                                     parent.shape());
  ChildNetwork one_shot = prune(parent, target);
  tune(one_shot, train, tc);
  ProbMask cold = init_temperature(target, 0.0, TemperatureVariant::kReverseDropout);
  cold.anneal_epochs = 3;
  if (!(anneal_tune(parent, cold, train, tc, 13).child.net == one_shot.net)) {
    failed.push_back("tau=0");
  }
  ProbMask instant = init_temperature(target, 0.5, TemperatureVariant::kReverseDropout);
  instant.anneal_epochs = 0;
  if (!(anneal_tune(parent, instant, train, tc, 14).child.net == one_shot.net)) {
    failed.push_back("anneal_epochs=0 (anneal_tune)");
  }
  DataSplits splits;
  splits.train = train;
  splits.validation = testing::random_dataset(40, 2, 3, 15);
  splits.test = testing::random_dataset(60, 2, 3, 16);
  for (auto mode : {MaskMode::kRandom, MaskMode::kPartition}) {
    SparseConfig sc;
    sc.members = 4;
    sc.sparsity = 0.5;
    sc.mode = mode;
    sc.tune = tc;
    sc.seed = 17;
    StochasticConfig st;
    st.members = 4;
    st.sparsity = 0.5;
    st.mode = mode;
    st.anneal_epochs = 0;
    st.tune = tc;
    st.seed = 17;
    const auto a = run_sparse(parent, splits, sc);
    const auto b = run_stochastic(parent, splits, st);
    bool same = a.record.members.size() == b.record.members.size();
    for (std::size_t i = 0; same && i < a.record.members.size(); ++i) {
      same = a.record.members[i].net == b.record.members[i].net;
    }
    if (!same) failed.push_back("anneal_epochs=0 ensemble, " + to_string(mode));
  }
  std::string detail = failed.empty() ? "all endpoint and degeneracy checks hold" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

Outcome c11() {
  using testing::golden_color;
  using testing::golden_gradient;
  using testing::golden_rings;
  std::vector<std::string> failed;
  const std::array<std::pair<std::string, std::string>, 10> golden{{
      {average_hash(golden_gradient()).hex(), "07070f0f0f1f1e3e"},
      {perceptual_hash(golden_gradient()).hex(), "152a55ab5235ea35"},
      {difference_hash(golden_gradient()).hex(), "0000000000010103"},
      {wavelet_hash(golden_gradient()).hex(), "07070f0f0f1f1e3e"},
      {average_hash(golden_rings()).hex(), "01387cc6c6c6fc78"},
      {perceptual_hash(golden_rings()).hex(), "522f0b353df0b4d0"},
      {difference_hash(golden_rings()).hex(), "e01c62e3e1e3620e"},
      {wavelet_hash(golden_rings()).hex(), "01387cc6c6c6fc78"},
      {color_hash(golden_color()).hex(), "7744f988113f"},
      {perceptual_hash(golden_color()).hex(), "0239664d5334ab5f"},
  }};
  for (const auto& [got, want] : golden) {
    if (got != want) failed.push_back("golden " + want + " got " + got);
  }
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    HashDigest x{HashAlgorithm::kPerceptual, std::vector<std::uint8_t>(64)};
    HashDigest y = x, z = x;
    for (std::size_t i = 0; i < 64; ++i) {
      x.bits[i] = static_cast<std::uint8_t>(rng.below(2));
      y.bits[i] = static_cast<std::uint8_t>(rng.below(2));
      z.bits[i] = static_cast<std::uint8_t>(rng.below(2));
    }
    if (hamming(x, x) != 0 || hamming(x, y) != hamming(y, x) ||
        hamming(x, z) > hamming(x, y) + hamming(y, z)) {
      failed.push_back("metric axioms");
      break;
    }
  }
  std::size_t invariance_breaks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Image img(24 + rng.below(40), 24 + rng.below(40), 1);
    for (auto& s : img.samples) s = static_cast<std::uint8_t>(20 + rng.below(80));
    Image affine = img, offset = img;
    for (auto& s : affine.samples) s = static_cast<std::uint8_t>(2 * s + 15);
    for (auto& s : offset.samples) s = static_cast<std::uint8_t>(s + 55);
    invariance_breaks += !(average_hash(img) == average_hash(affine));
    invariance_breaks += !(wavelet_hash(img) == wavelet_hash(affine));
    invariance_breaks += !(perceptual_hash(img) == perceptual_hash(offset));
  }
  if (invariance_breaks) failed.push_back(fmt("%zu invariance breaks", invariance_breaks));
  std::string means;
  for (auto a : {HashAlgorithm::kAverage, HashAlgorithm::kPerceptual, HashAlgorithm::kDifference,
                 HashAlgorithm::kWavelet}) {
    double total = 0.0;
    for (int pair = 0; pair < 200; ++pair) {
      const Image x = testing::noise_image(64, 64, 1, rng);
      const Image y = testing::noise_image(64, 64, 1, rng);
      total += static_cast<double>(hamming(compute_hash(a, x), compute_hash(a, y)));
    }
    means += fmt(" %s %.2f", to_string(a).c_str(), total / 200.0);
    if (std::abs(total / 200.0 - 32.0) > 3.0) failed.push_back(to_string(a) + " noise distance");
  }
  std::string detail = failed.empty() ? "golden, axioms and invariances hold; noise means" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail + (failed.empty() ? means : "")};
}

Outcome c12() {
  double sparse_pdr = 0.0, noisy_pdr = 0.0;
  std::size_t matched = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SeedContext ctx = spiral_seed(s);
    const auto r = run_sparse(ctx.parent, ctx.data, partition_config(2, s));
    const auto sp = member_probabilities(r.record, ctx.data.test.inputs);
    const double sparse_acc = (r.members[0].test.accuracy + r.members[1].test.accuracy) / 2;
    // Noise scale whose children match the partition members on validation.
    const double target = (r.members[0].fitness + r.members[1].fitness) / 2;
    double best = 0.0, best_gap = INFINITY;
    for (int gi = 0; gi < 24; ++gi) {
      const double sigma = 0.005 * std::pow(60.0, gi / 23.0);
      double a = 0.0;
      for (std::size_t k = 0; k < 8; ++k) {
        const std::uint64_t seed = derive_seed(s, Stream::kProbe, k);
        const NetMask m = sample_mask({0.5, Granularity::kUnstructured, Scope::kLayerwise, seed},
                                      ctx.parent.shape());
        const ChildNetwork child =
            mutate(ctx.parent, m, {0.0, sigma, derive_seed(seed, Stream::kNoise)});
        a += test_accuracy(child.net, ctx.data.validation) / 8;
      }
      if (std::abs(a - target) < best_gap) {
        best_gap = std::abs(a - target);
        best = sigma;
      }
    }
    NoisyConfig nc;
    nc.population = 2;
    nc.k = 2;
    nc.sparsity = 0.5;
    nc.sigma = best;
    nc.seed = s;
    nc.include_parent = false;
    const auto rn = run_noisy(ctx.parent, ctx.data, nc);
    const auto np = member_probabilities(rn.record, ctx.data.test.inputs);
    const double noisy_acc = (rn.members[0].test.accuracy + rn.members[1].test.accuracy) / 2;
    if (std::abs(sparse_acc - noisy_acc) <= 0.02) {
      ++matched;
      sparse_pdr += prediction_disagreement(sp[0], sp[1]);
      noisy_pdr += prediction_disagreement(np[0], np[1]);
    }
  }
  if (matched == 0) return {false, "no seed matched member accuracy within 2 points"};
  sparse_pdr /= static_cast<double>(matched);
  noisy_pdr /= static_cast<double>(matched);
  return {sparse_pdr > noisy_pdr, fmt("matched %zu/20 seeds; mean PDR partitioned %.4f, noisy %.4f",
                                      matched, sparse_pdr, noisy_pdr)};
}

struct Criterion {
  int id;
  std::function<Outcome()> run;
  double budget_s;  // 0: no runtime bound
};

}  // namespace
}  // namespace subnet

int main(int argc, char** argv) {
  using namespace subnet;
  const std::vector<Criterion> all{{1, c1, 180}, {2, c2, 120}, {3, c3, 10}, {4, c4, 0},
                                   {5, c5, 0},   {6, c6, 0},   {7, c7, 300}, {8, c8, 240},
                                   {9, c9, 0},   {10, c10, 0}, {11, c11, 0}, {12, c12, 0}};
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int passed = 0, run = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    ++run;
    passed += o.pass;
    std::printf("criterion %2d: %s  %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria pass\n", passed, run);
  return 0;
}

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "subnet/ensemble.hpp"
#include "subnet/errors.hpp"
#include "support.hpp"

namespace subnet {
namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  std::vector<std::vector<double>> v;
  for (const auto& row : r) v.emplace_back(row);
  return Matrix::from_rows(v);
}

DataSplits small_splits(std::uint64_t seed) {
  return {testing::random_dataset(96, 2, 3, seed), testing::random_dataset(48, 2, 3, seed + 1),
          testing::random_dataset(64, 2, 3, seed + 2)};
}

TEST(CombineMean, HandCase) {
  const std::vector<Matrix> m{rows({{0.8, 0.2}, {0.3, 0.7}}), rows({{0.2, 0.8}, {0.7, 0.3}})};
  EXPECT_EQ(combine_mean(m), rows({{0.5, 0.5}, {0.5, 0.5}}));
  const std::vector<Matrix> one{rows({{0.1, 0.9}})};
  EXPECT_EQ(combine_mean(one), one[0]);
  const std::vector<Matrix> same(5, rows({{0.1, 0.3, 0.6}}));
  EXPECT_EQ(combine_mean(same), same[0]);
  const std::vector<Matrix> bad{rows({{1.0, 0.0}}), rows({{1.0, 0.0}, {0.0, 1.0}})};
  EXPECT_THROW(combine_mean(bad), ShapeError);
}

TEST(CombineMean, PermutationInvariantAndNormalized) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> m;
    const std::size_t k = 2 + rng.below(7);
    for (std::size_t i = 0; i < k; ++i) m.push_back(testing::random_probs(20, 4, rng));
    const Matrix base = combine_mean(m);
    std::reverse(m.begin(), m.end());
    std::rotate(m.begin(), m.begin() + 1, m.end());
    EXPECT_EQ(combine_mean(m), base);
    for (std::size_t r = 0; r < base.rows(); ++r) {
      double s = 0.0;
      for (double v : base.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

std::vector<Matrix> voters(const std::vector<std::size_t>& picks, std::size_t classes) {
  std::vector<Matrix> m;
  for (std::size_t p : picks) {
    Matrix x(1, classes, 0.1 / static_cast<double>(classes - 1));
    x(0, p) = 0.9;
    m.push_back(x);
  }
  return m;
}

TEST(CombineVote, MajorityAndTies) {
  EXPECT_EQ(combine_vote(voters({2, 2, 2}, 3)), std::vector<int>{2});
  EXPECT_EQ(combine_vote(voters({0, 0, 1}, 3)), std::vector<int>{0});
  EXPECT_EQ(combine_vote(voters({1, 2}, 3)), std::vector<int>{1});
  // Exhaustive two-member, three-class enumeration.
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      EXPECT_EQ(combine_vote(voters({a, b}, 3))[0], static_cast<int>(std::min(a, b)));
    }
  }
}

TEST(Accuracy, HandCounts) {
  const Matrix p = rows({{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}, {0.3, 0.7}, {0.5, 0.5}});
  EXPECT_DOUBLE_EQ(accuracy(PredictionSet{p, {0, 1, 0, 0, 1}}), 0.6);
  EXPECT_EQ(accuracy(PredictionSet{p, {0, 1, 0, 1, 0}}), 1.0);
  EXPECT_EQ(accuracy(PredictionSet{p, {1, 0, 1, 0, 1}}), 0.0);
}

TEST(Nll, HandValues) {
  EXPECT_EQ(nll(PredictionSet{rows({{1.0, 0.0}, {0.0, 1.0}}), {0, 1}}), 0.0);
  EXPECT_NEAR(nll(PredictionSet{rows({{0.25, 0.25, 0.25, 0.25}}), {2}}), std::log(4.0), 1e-15);
  const Matrix p = rows({{0.7, 0.2, 0.1}, {0.2, 0.2, 0.6}, {0.5, 0.25, 0.25}});
  const double expected = -(std::log(0.7) + std::log(0.2) + std::log(0.5)) / 3.0;
  EXPECT_NEAR(nll(PredictionSet{p, {0, 1, 0}}), expected, 1e-15);
}

TEST(Ece, HandCases) {
  EXPECT_EQ(ece(PredictionSet{rows({{1.0, 0.0}, {0.0, 1.0}}), {0, 1}}), 0.0);
  const Matrix p = rows({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}});
  EXPECT_NEAR(ece(PredictionSet{p, {0, 0, 0, 1}}, 1), 0.0, 1e-15);
  const Matrix q = rows({{0.5, 0.5}, {0.45, 0.55}, {0.9, 0.1}, {0.2, 0.8}});
  const std::vector<int> y{1, 1, 0, 0};
  // Bin 0 (conf <= 0.5): sample 0, wrong (argmax 0, label 1) -> |0 - 0.5|.
  // Bin 1: samples 1,2,3 with conf 0.55, 0.9, 0.8, hits 1,1,0 -> |2 - 2.25|.
  EXPECT_NEAR(ece(PredictionSet{q, y}, 2), (0.5 + 0.25) / 4.0, 1e-15);
  EXPECT_NEAR(ece(PredictionSet{q, y}, 2), oracle::ece(q, y, 2), 1e-15);
  EXPECT_THROW(ece(PredictionSet{q, y}, 0), ConfigError);
}

TEST(Metrics, MatchOraclesOnRandomSets) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const std::size_t c = 2 + rng.below(6);
    const Matrix p = testing::random_probs(n, c, rng);
    const Matrix q = testing::random_probs(n, c, rng);
    const std::vector<int> y = testing::random_labels(n, c, rng);
    const std::size_t bins = 1 + rng.below(20);
    const PredictionSet ps{p, y};
    ASSERT_NEAR(ece(ps, bins), oracle::ece(p, y, bins), 1e-12);
    ASSERT_NEAR(nll(ps), oracle::nll(p, y), 1e-12);
    ASSERT_EQ(accuracy(ps), oracle::accuracy(p, y));
    ASSERT_NEAR(mean_kl(p, q), oracle::mean_kl(p, q), 1e-12);
    ASSERT_GE(mean_kl(p, q), 0.0);
    ASSERT_NEAR(mean_kl(p, p), 0.0, 1e-15);
  }
}

TEST(MeanKl, HandValues) {
  EXPECT_NEAR(mean_kl(rows({{1.0, 0.0}}), rows({{0.5, 0.5}})), std::log(2.0), 1e-11);
  EXPECT_EQ(mean_kl(rows({{0.3, 0.7}}), rows({{0.3, 0.7}})), 0.0);
  EXPECT_THROW(mean_kl(rows({{1.0, 0.0}}), rows({{1.0, 0.0}, {0.0, 1.0}})), ShapeError);
}

TEST(MeanOutputMse, HandValues) {
  EXPECT_EQ(mean_output_mse(rows({{1.0, 0.0}}), rows({{0.0, 1.0}})), 2.0);
  EXPECT_EQ(mean_output_mse(rows({{0.5, 0.5}}), rows({{0.5, 0.5}})), 0.0);
  const Matrix a = rows({{0.5, 0.25, 0.25}, {0.0, 0.5, 0.5}});
  const Matrix b = rows({{0.25, 0.5, 0.25}, {0.5, 0.5, 0.0}});
  // Row 0: 0.0625 + 0.0625; row 1: 0.25 + 0.25.
  EXPECT_DOUBLE_EQ(mean_output_mse(a, b), (0.125 + 0.5) / 2.0);
}

TEST(SelectTopK, HandSortAndTies) {
  const std::vector<double> f{0.9, 0.8, 0.95};
  EXPECT_EQ(select_top_k(f, 2), (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(select_top_k(f, 3).size(), 3u);
  const std::vector<double> tied{0.5, 0.5, 0.5};
  EXPECT_EQ(select_top_k(tied, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(select_top_k(f, 4), ConfigError);
}

TEST(Evaluate, VoteTakesAccuracyFromVotes) {
  const DenseNet parent = testing::random_net({2, 8, 3}, Activation::kRelu, 2);
  const DataSplits data = small_splits(5);
  EnsembleRecord rec;
  rec.parent = parent;
  for (std::uint64_t s = 0; s < 3; ++s) {
    rec.members.push_back(mutate(parent, NetMask::filled(parent.shape(), 1), {0.0, 0.5, s}));
  }
  rec.combination = Combination::kVote;
  const auto probs = member_probabilities(rec, data.test.inputs);
  ASSERT_EQ(probs.size(), 3u);
  const Metrics m = evaluate(rec, data.test);
  EXPECT_EQ(m.accuracy, accuracy(combine_vote(probs), data.test.labels));
  const PredictionSet mean_set{combine_mean(probs), data.test.labels};
  EXPECT_EQ(m.nll, nll(mean_set));
  EXPECT_EQ(m.ece, ece(mean_set));
  rec.include_parent = true;
  EXPECT_EQ(member_probabilities(rec, data.test.inputs).size(), 4u);
}

TEST(TrustRegion, DegenerateGrids) {
  const DenseNet parent = testing::random_net({2, 16, 3}, Activation::kRelu, 3);
  const Dataset probe = testing::random_dataset(100, 2, 3, 4);
  TrustRegionSpec spec;
  spec.sigmas = {0.0};
  spec.sparsities = {0.0, 0.5};
  spec.samples_per_cell = 3;
  const auto zero = trust_region_search(parent, probe, spec);
  const double parent_acc = accuracy(PredictionSet{predict_proba(parent, probe.inputs), probe.labels});
  for (const auto& cell : zero.grid) {
    EXPECT_EQ(cell.mean_kl, 0.0);
    EXPECT_EQ(cell.mean_accuracy, parent_acc);
  }
  spec.sigmas = {0.1, 0.5, 1.0, 2.0};
  spec.kl_target = std::numeric_limits<double>::infinity();
  const auto free = trust_region_search(parent, probe, spec);
  ASSERT_EQ(free.grid.size(), 8u);
  double best = -1.0;
  for (const auto& cell : free.grid) best = std::max(best, cell.mean_accuracy);
  EXPECT_EQ(free.best.mean_accuracy, best);
  EXPECT_TRUE(free.within_target);
  spec.kl_target = 1e-300;
  const auto none = trust_region_search(parent, probe, spec);
  EXPECT_FALSE(none.within_target);
  double lowest = 1e300;
  for (const auto& cell : none.grid) lowest = std::min(lowest, cell.mean_kl);
  EXPECT_EQ(none.best.mean_kl, lowest);
  spec.sigmas.clear();
  EXPECT_THROW(trust_region_search(parent, probe, spec), ConfigError);
}

TEST(TrustRegion, SigmaShrinksWithTarget) {
  const SeedContext ctx = testing::spiral_context(1);
  TrustRegionSpec spec;
  spec.sigmas = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4};
  spec.sparsities = {0.5};
  spec.samples_per_cell = 4;
  spec.seed = 9;
  // One exhaustive grid, then the selection rule at each target.
  spec.kl_target = std::numeric_limits<double>::infinity();
  const auto grid = trust_region_search(ctx.parent, ctx.data.validation, spec).grid;
  double previous = std::numeric_limits<double>::infinity();
  for (double target : {0.5, 0.05, 0.005}) {
    spec.kl_target = target;
    const auto r = trust_region_search(ctx.parent, ctx.data.validation, spec);
    EXPECT_EQ(r.grid.size(), grid.size());
    double max_ok = -1.0;
    for (const auto& cell : grid) {
      if (cell.mean_kl <= target) max_ok = std::max(max_ok, cell.sigma);
    }
    EXPECT_LE(r.best.sigma, max_ok);
    EXPECT_LE(r.best.sigma, previous);
    previous = r.best.sigma;
  }
}

TEST(RunNoisy, ZeroSigmaMatchesParent) {
  const DenseNet parent = testing::random_net({2, 16, 3}, Activation::kRelu, 6);
  const DataSplits data = small_splits(7);
  NoisyConfig c;
  c.population = 4;
  c.k = 4;
  c.sigma = 0.0;
  for (bool include : {true, false}) {
    c.include_parent = include;
    const auto r = run_noisy(parent, data, c);
    EXPECT_EQ(r.ensemble.accuracy, r.parent.accuracy);
    EXPECT_EQ(r.ensemble.nll, r.parent.nll);
    EXPECT_EQ(r.ensemble.ece, r.parent.ece);
  }
}

TEST(RunNoisy, SelectsTopKAndIsDeterministic) {
  const DenseNet parent = testing::random_net({2, 16, 3}, Activation::kRelu, 8);
  const DataSplits data = small_splits(9);
  NoisyConfig c;
  c.population = 8;
  c.k = 3;
  c.sigma = 0.3;
  c.seed = 5;
  const auto r = run_noisy(parent, data, c);
  ASSERT_EQ(r.candidate_fitness.size(), 8u);
  EXPECT_EQ(r.selected, select_top_k(r.candidate_fitness, 3));
  EXPECT_EQ(r.record.members.size(), 3u);
  const auto again = run_noisy(parent, data, c);
  EXPECT_EQ(again.ensemble.accuracy, r.ensemble.accuracy);
  EXPECT_EQ(again.ensemble.nll, r.ensemble.nll);
  c.k = 9;
  EXPECT_THROW(run_noisy(parent, data, c), ConfigError);
}

TEST(RunNoisy, MirroredPopulationNeedsQuads) {
  const DenseNet parent = testing::random_net({2, 8, 3}, Activation::kRelu, 8);
  const DataSplits data = small_splits(9);
  NoisyConfig c;
  c.population = 6;
  c.k = 2;
  c.mirrored = true;
  EXPECT_THROW(run_noisy(parent, data, c), ConfigError);
  c.population = 8;
  EXPECT_EQ(run_noisy(parent, data, c).candidate_fitness.size(), 8u);
}

TrainConfig quick_tune() {
  TrainConfig t;
  t.optimizer.learning_rate = 0.01;
  t.epochs = 2;
  t.batch_size = 16;
  return t;
}

TEST(MemberMasks, PartitionGroups) {
  const NetShape shape{{8, 2}, {3, 8}};
  EXPECT_EQ(partition_group_size(0.5), 2u);
  EXPECT_EQ(partition_group_size(0.75), 4u);
  EXPECT_EQ(partition_group_size(0.6), 0u);
  const auto masks = member_masks(shape, 6, 2.0 / 3.0, Granularity::kUnstructured,
                                  Scope::kLayerwise, MaskMode::kPartition, 3);
  ASSERT_EQ(masks.size(), 6u);
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t l = 0; l < shape.size(); ++l) {
      for (std::size_t i = 0; i < shape[l].size(); ++i) {
        int sum = 0;
        for (std::size_t j = 0; j < 3; ++j) sum += masks[3 * g + j].layers[l].bits[i];
        ASSERT_EQ(sum, 1);
      }
    }
  }
  EXPECT_THROW(member_masks(shape, 4, 0.6, Granularity::kUnstructured, Scope::kLayerwise,
                            MaskMode::kPartition, 3),
               ConfigError);
}

TEST(RunSparse, MembersAreSparseAndFrozen) {
  const DenseNet parent = testing::random_net({2, 16, 16, 3}, Activation::kRelu, 10);
  const DataSplits data = small_splits(11);
  SparseConfig c;
  c.members = 4;
  c.sparsity = 0.5;
  c.mode = MaskMode::kPartition;
  c.tune = quick_tune();
  const auto r = run_sparse(parent, data, c);
  ASSERT_EQ(r.record.members.size(), 4u);
  for (std::size_t l = 0; l < parent.depth(); ++l) {
    const auto& a = r.record.members[0].net.layer(l).weights.data();
    const auto& b = r.record.members[1].net.layer(l).weights.data();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i] * b[i], 0.0);
  }
}

TEST(RunStochastic, ZeroAnnealEpochsReproducesSparse) {
  const DenseNet parent = testing::random_net({2, 16, 16, 3}, Activation::kRelu, 12);
  const DataSplits data = small_splits(13);
  for (auto mode : {MaskMode::kRandom, MaskMode::kPartition}) {
    SparseConfig sc;
    sc.members = 4;
    sc.sparsity = 0.5;
    sc.mode = mode;
    sc.tune = quick_tune();
    sc.seed = 21;
    StochasticConfig st;
    st.members = 4;
    st.sparsity = 0.5;
    st.mode = mode;
    st.anneal_epochs = 0;
    st.tune = quick_tune();
    st.seed = 21;
    const auto a = run_sparse(parent, data, sc);
    const auto b = run_stochastic(parent, data, st);
    ASSERT_EQ(a.record.members.size(), b.record.members.size());
    for (std::size_t i = 0; i < a.record.members.size(); ++i) {
      EXPECT_EQ(a.record.members[i].net, b.record.members[i].net);
    }
    EXPECT_EQ(a.ensemble.accuracy, b.ensemble.accuracy);
    EXPECT_EQ(a.ensemble.nll, b.ensemble.nll);
    EXPECT_EQ(a.ensemble.ece, b.ensemble.ece);
  }
}

}  // namespace
}  // namespace subnet

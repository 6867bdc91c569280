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
#include <filesystem>
#include <string>
#include <vector>

#include "subnet/config.hpp"
#include "subnet/errors.hpp"

namespace subnet {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigDir = fs::path(SUBNET_SOURCE_DIR) / "configs";

bool any_contains(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

TEST(Config, ShippedConfigsValidate) {
  std::size_t seen = 0;
  std::vector<ExperimentKind> kinds;
  for (const auto& entry : fs::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".cfg") continue;
    ++seen;
    SCOPED_TRACE(entry.path().string());
    ExperimentConfig c;
    ASSERT_NO_THROW(c = load_config(entry.path()));
    EXPECT_EQ(c.schema_version, kSchemaVersion);
    EXPECT_EQ(entry.path().stem().string(), to_string(c.kind));
    kinds.push_back(c.kind);
  }
  EXPECT_EQ(seen, kAllKinds.size());
  for (ExperimentKind k : kAllKinds) {
    EXPECT_NE(std::find(kinds.begin(), kinds.end(), k), kinds.end()) << to_string(k);
  }
}

TEST(Config, RelativeCorpusPathsResolveAgainstTheFile) {
  const ExperimentConfig c = load_config(kConfigDir / "hash_corpus.cfg");
  EXPECT_EQ(fs::path(c.dir_a), (kConfigDir / "corpus/a").lexically_normal());
  EXPECT_TRUE(fs::is_directory(c.dir_a));
}

TEST(Config, KindNamesRoundTrip) {
  for (ExperimentKind k : kAllKinds) EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  EXPECT_THROW(parse_experiment_kind("nonsense"), ConfigError);
}

TEST(Config, MinimalConfigTakesDefaults) {
  const ExperimentConfig c = parse_config(
      "schema_version = 1\nkind = kl_ablation\nsigmas = 0.1\nsparsities = 0.5\n");
  EXPECT_EQ(c.kind, ExperimentKind::kKlAblation);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(c.data.source, "spiral");
  EXPECT_EQ(c.data.n, 4000u);
  EXPECT_EQ(c.model.hidden, (std::vector<std::size_t>{64, 64, 64}));
  EXPECT_DOUBLE_EQ(c.kl_target, 0.05);
  EXPECT_EQ(c.train.epochs, default_train_config().epochs);
}

TEST(Config, NegativeSigmaIsRejectedWithLine) {
  const std::string text =
      "schema_version = 1\nkind = kl_ablation\nsigmas = 0.1, -0.2\nsparsities = 0.5\n";
  EXPECT_THROW(parse_config(text, "x.cfg"), ValidationError);
  const auto errors = validate_config_text(text, "x.cfg");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("x.cfg:3"), std::string::npos) << errors[0];
  EXPECT_NE(errors[0].find("sigmas"), std::string::npos);
}

TEST(Config, AnnealEpochsBeyondTuningIsRejected) {
  const std::string text =
      "schema_version = 1\nkind = anneal_ablation\nsparsities = 0.9\n"
      "tune.epochs = 4\nanneal_epochs = 6\npruning_epochs = 2\n";
  const auto errors = validate_config_text(text);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_TRUE(any_contains(errors, "anneal_epochs"));
  EXPECT_TRUE(validate_config_text("schema_version = 1\nkind = anneal_ablation\n"
                                   "sparsities = 0.9\ntune.epochs = 6\nanneal_epochs = 6\n"
                                   "pruning_epochs = 2\n")
                  .empty());
}

TEST(Config, UnknownDuplicateAndMalformedAreAllReported) {
  const std::string text =
      "schema_version = 1\n"
      "kind = kl_ablation\n"
      "sigmas = 0.1\n"
      "sparsities = 0.5\n"
      "colour = blue\n"
      "sigmas = 0.2\n"
      "children = many\n"
      "this line has no equals sign\n";
  const auto errors = validate_config_text(text, "bad.cfg");
  EXPECT_EQ(errors.size(), 4u);
  EXPECT_TRUE(any_contains(errors, "bad.cfg:5: unknown key 'colour'"));
  EXPECT_TRUE(any_contains(errors, "bad.cfg:6: duplicate key 'sigmas'"));
  EXPECT_TRUE(any_contains(errors, "bad.cfg:7: children"));
  EXPECT_TRUE(any_contains(errors, "bad.cfg:8: expected 'key = value'"));
  try {
    parse_config(text, "bad.cfg");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.errors(), errors);
  }
}

TEST(Config, MissingHeaderKeysAndVersion) {
  auto errors = validate_config_text("sigmas = 0.1\n");
  EXPECT_TRUE(any_contains(errors, "schema_version"));
  EXPECT_TRUE(any_contains(errors, "kind"));
  errors = validate_config_text("schema_version = 2\nkind = landscape\n");
  EXPECT_TRUE(any_contains(errors, "unsupported version 2"));
}

TEST(Config, KeysForOtherKindsAreRejected) {
  const auto errors = validate_config_text(
      "schema_version = 1\nkind = hash_corpus\ndir_a = a\ndir_b = b\nsigmas = 0.1\n");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_TRUE(any_contains(errors, "not used by this experiment kind"));
}

TEST(Config, CrossFieldChecks) {
  const std::string base = "schema_version = 1\nkind = ensemble_size\nsizes = 1, 2\n";
  EXPECT_TRUE(validate_config_text(base + "sparsities = 0.75\nmodes = partition\n").empty());
  EXPECT_TRUE(any_contains(validate_config_text(base + "sparsities = 0.6\nmodes = partition\n"),
                           "partition mode"));
  EXPECT_TRUE(any_contains(
      validate_config_text(base + "sparsities = 0.5\nsplit = 0.5, 0.5, 0.5\n"), "sum to 1"));
  EXPECT_TRUE(any_contains(
      validate_config_text(base + "sparsities = 0.5\nmodes = random\n"
                                  "granularities = structured\nscope = global\n"),
      "global scope"));
}

TEST(Config, CanonicalTextIsStableAndReparses) {
  const ExperimentConfig a = load_config(kConfigDir / "kl_ablation.cfg");
  const std::string text = canonical_text(a);
  EXPECT_EQ(text, canonical_text(load_config(kConfigDir / "kl_ablation.cfg")));
  EXPECT_NE(text, canonical_text(load_config(kConfigDir / "landscape.cfg")));
  EXPECT_NE(text.find("kind = kl_ablation"), std::string::npos);
}

TEST(SeedList, RangesAndLists) {
  EXPECT_EQ(parse_seed_list("0, 3, 5-9"),
            (std::vector<std::uint64_t>{0, 3, 5, 6, 7, 8, 9}));
  EXPECT_EQ(parse_seed_list("4"), (std::vector<std::uint64_t>{4}));
  EXPECT_EQ(parse_seed_list("2-2"), (std::vector<std::uint64_t>{2}));
  EXPECT_THROW(parse_seed_list("9-5"), ConfigError);
  EXPECT_THROW(parse_seed_list(""), ConfigError);
  EXPECT_THROW(parse_seed_list("x"), ConfigError);
  EXPECT_THROW(parse_seed_list("-3"), ConfigError);
}

}  // namespace
}  // namespace subnet

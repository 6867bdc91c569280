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

// Command-line front end: run, validate, hash, landscape.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subnet/config.hpp"
#include "subnet/data_io.hpp"
#include "subnet/diversity.hpp"
#include "subnet/errors.hpp"
#include "subnet/experiments.hpp"
#include "subnet/phash.hpp"
#include "subnet/rng.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void print_errors(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e << "\n";
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw subnet::FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subnetwork ensembles: experiments, perceptual hashes, loss landscapes"};
  app.set_version_flag("--version", SUBNET_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_text;
  std::size_t workers = 1;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seeds", seeds_text, "Seed list overriding the config, e.g. 0-9");
  run->add_option("--workers", workers, "Parallel seeds")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "No progress output");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config_path, "Config file")->required();
  validate->add_flag("--quiet", quiet, "Print nothing on success");

  std::vector<std::string> images;
  std::string algorithm = "all";
  auto* hash = app.add_subcommand("hash", "Print perceptual digests of PGM/PPM images");
  hash->add_option("images", images, "Image files")->required();
  hash->add_option("--algorithm", algorithm, "ahash, phash, dhash, whash, colorhash or all");

  std::string model_path, data_path;
  double span = 1.0;
  std::size_t resolution = 21;
  std::uint64_t seed = 0;
  auto* landscape = app.add_subcommand("landscape", "Loss surface along two random directions");
  landscape->add_option("--model", model_path, "Model file")->required();
  landscape->add_option("--data", data_path, "CSV dataset (label last)")->required();
  landscape->add_option("--out", out_dir, "Output CSV (stdout if omitted)");
  landscape->add_option("--span", span, "Half-width of the grid")->check(CLI::PositiveNumber);
  landscape->add_option("--resolution", resolution, "Points per axis")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1001}));
  landscape->add_option("--seed", seed, "Direction seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) {
      const auto errors = subnet::validate_config_text(read_text(config_path), config_path);
      if (!errors.empty()) {
        print_errors(errors);
        return kInvalid;
      }
      if (!quiet) std::cout << config_path << ": ok\n";
      return kOk;
    }
    if (*run) {
      subnet::ExperimentConfig config;
      try {
        config = subnet::load_config(config_path);
      } catch (const subnet::ValidationError& e) {
        print_errors(e.errors());
        return kInvalid;
      }
      subnet::RunOptions options;
      options.workers = workers;
      if (!seeds_text.empty()) {
        try {
          options.seeds = subnet::parse_seed_list(seeds_text);
        } catch (const subnet::ConfigError& e) {
          std::cerr << "error: --seeds: " << e.what() << "\n";
          return kInvalid;
        }
      }
      if (!quiet) options.log = [](const std::string& msg) { std::cerr << msg << "\n"; };
      subnet::run_experiment(config, out_dir, options);
      return kOk;
    }
    if (*hash) {
      std::vector<subnet::HashAlgorithm> algorithms;
      if (algorithm == "all") {
        algorithms.assign(subnet::kAllHashes.begin(), subnet::kAllHashes.end());
      } else {
        try {
          algorithms.push_back(subnet::parse_hash_algorithm(algorithm));
        } catch (const subnet::ConfigError& e) {
          std::cerr << "error: " << e.what() << "\n";
          return kInvalid;
        }
      }
      for (const auto& path : images) {
        const subnet::Image img = subnet::read_pnm(path);
        for (auto a : algorithms) {
          std::cout << path << " " << subnet::to_string(a) << " "
                    << subnet::compute_hash(a, img).hex() << "\n";
        }
      }
      return kOk;
    }
    if (*landscape) {
      const subnet::LoadedModel model = subnet::load_model(model_path);
      const subnet::Dataset data = subnet::read_csv(data_path);
      const auto [delta, eta] =
          subnet::random_directions(model.net, subnet::derive_seed(seed, subnet::Stream::kDirection));
      std::vector<double> axis(resolution);
      for (std::size_t i = 0; i < resolution; ++i) {
        axis[i] = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(resolution - 1);
      }
      const subnet::Matrix slice = subnet::landscape_slice(model.net, data, delta, eta, axis, axis);
      std::ostringstream csv;
      csv.precision(17);
      for (std::size_t r = 0; r < slice.rows(); ++r) {
        for (std::size_t c = 0; c < slice.cols(); ++c) csv << (c ? "," : "") << slice(r, c);
        csv << "\n";
      }
      if (out_dir.empty()) {
        std::cout << csv.str();
      } else {
        std::ofstream out(out_dir);
        out << csv.str();
        if (!out) throw std::runtime_error("cannot write " + out_dir);
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

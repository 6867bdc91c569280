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

// Perceptual image hashes (average, perceptual/DCT, difference, wavelet,
// color) compared by Hamming distance, plus PGM/PPM image I/O.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace subnet {

// 8-bit image with 1 or 3 interleaved channels, row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> samples;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), samples(w * h * c, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return samples[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return samples[(y * width + x) * channels + c];
  }

  // Throws FormatError on zero dimensions, bad channel count or size.
  void validate() const;
};

// Binary PGM (P5) and PPM (P6) with maxval <= 255.
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& image);

enum class HashAlgorithm { kAverage, kPerceptual, kDifference, kWavelet, kColor };

inline constexpr std::array<HashAlgorithm, 5> kAllHashes = {
    HashAlgorithm::kAverage, HashAlgorithm::kPerceptual,
    HashAlgorithm::kDifference, HashAlgorithm::kWavelet, HashAlgorithm::kColor};

std::string to_string(HashAlgorithm a);
HashAlgorithm parse_hash_algorithm(const std::string& name);
std::size_t digest_bits(HashAlgorithm a);

struct HashDigest {
  HashAlgorithm algorithm = HashAlgorithm::kAverage;
  std::vector<std::uint8_t> bits;  // row-major bit order
  // Set when a grayscale image was channel-replicated for the color hash.
  bool replicated_gray = false;

  // Lowercase hex, most significant bit first.
  std::string hex() const;

  friend bool operator==(const HashDigest& a, const HashDigest& b) {
    return a.algorithm == b.algorithm && a.bits == b.bits;
  }
};

HashDigest average_hash(const Image& img);
HashDigest difference_hash(const Image& img);
HashDigest perceptual_hash(const Image& img);
HashDigest wavelet_hash(const Image& img);
HashDigest color_hash(const Image& img);
HashDigest compute_hash(HashAlgorithm algorithm, const Image& img);

// Number of differing bits. Throws ConfigError if the algorithms or
// lengths differ.
std::size_t hamming(const HashDigest& a, const HashDigest& b);

struct CorpusPair {
  std::string name;
  std::array<std::size_t, kAllHashes.size()> distance{};
  double rmse = 0.0;  // NaN when the images differ in shape
};

struct CorpusReport {
  std::vector<CorpusPair> pairs;  // sorted by name
  std::array<double, kAllHashes.size()> mean{};
  std::array<double, kAllHashes.size()> se{};
  double mean_rmse = 0.0;
  double se_rmse = 0.0;
  std::vector<std::string> unmatched;  // "a/<name>" or "b/<name>", in one directory only

  // One row per pair, then "mean" and "se" rows.
  std::string to_csv() const;
};

// Hashes every .pgm/.ppm file present under the same name in both
// directories. Files found in only one are listed by side and name.
CorpusReport corpus_report(const std::filesystem::path& dir_a,
                           const std::filesystem::path& dir_b);

}  // namespace subnet

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

#include "subnet/phash.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "subnet/errors.hpp"

namespace subnet {

namespace {

using Plane = std::vector<std::int64_t>;  // row-major

// Luma scaled by 1000 so that it stays integral.
Plane gray_plane(const Image& img) {
  img.validate();
  Plane out(img.width * img.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* px = &img.samples[i * img.channels];
    out[i] = img.channels == 1
                 ? 1000 * std::int64_t{px[0]}
                 : 299 * std::int64_t{px[0]} + 587 * std::int64_t{px[1]} +
                       114 * std::int64_t{px[2]};
  }
  return out;
}

// Overlap weights between n_in source cells and n_out target cells, both
// spanning the same interval. Weights for one target cell sum to n_in.
struct Overlap {
  std::size_t first;
  std::vector<std::int64_t> weights;
};

std::vector<Overlap> overlaps(std::size_t n_in, std::size_t n_out) {
  std::vector<Overlap> out(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    const std::size_t lo = j * n_in;
    const std::size_t hi = (j + 1) * n_in;
    const std::size_t first = lo / n_out;
    const std::size_t last = (hi + n_out - 1) / n_out;  // exclusive
    out[j].first = first;
    for (std::size_t x = first; x < last; ++x) {
      const std::size_t s = std::max(lo, x * n_out);
      const std::size_t e = std::min(hi, (x + 1) * n_out);
      out[j].weights.push_back(e > s ? static_cast<std::int64_t>(e - s) : 0);
    }
  }
  return out;
}

// Exact area-average resize. Returned values are the cell means scaled by
// w_in * h_in.
template <typename T>
std::vector<T> area_resize(const std::vector<T>& plane, std::size_t w_in,
                           std::size_t h_in, std::size_t w_out,
                           std::size_t h_out) {
  const auto ox = overlaps(w_in, w_out);
  const auto oy = overlaps(h_in, h_out);
  std::vector<T> tmp(h_in * w_out, T{});
  for (std::size_t y = 0; y < h_in; ++y) {
    for (std::size_t j = 0; j < w_out; ++j) {
      T acc{};
      for (std::size_t k = 0; k < ox[j].weights.size(); ++k) {
        acc += static_cast<T>(ox[j].weights[k]) * plane[y * w_in + ox[j].first + k];
      }
      tmp[y * w_out + j] = acc;
    }
  }
  std::vector<T> out(h_out * w_out, T{});
  for (std::size_t i = 0; i < h_out; ++i) {
    for (std::size_t j = 0; j < w_out; ++j) {
      T acc{};
      for (std::size_t k = 0; k < oy[i].weights.size(); ++k) {
        acc += static_cast<T>(oy[i].weights[k]) * tmp[(oy[i].first + k) * w_out + j];
      }
      out[i * w_out + j] = acc;
    }
  }
  return out;
}

Plane resized_gray(const Image& img, std::size_t w, std::size_t h) {
  return area_resize(gray_plane(img), img.width, img.height, w, h);
}

template <typename T>
T lower_median(std::vector<T> values) {
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  return values[mid];
}

HashDigest digest(HashAlgorithm a) {
  HashDigest d;
  d.algorithm = a;
  d.bits.reserve(digest_bits(a));
  return d;
}

std::string read_token(std::istream& in) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::string& what) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(),
                                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw FormatError("bad image " + what + " '" + tok + "'");
  }
  return std::stoull(tok);
}

std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                    std::sqrt(static_cast<double>(v.size()))};
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void Image::validate() const {
  if (width == 0 || height == 0) throw FormatError("image has a zero dimension");
  if (channels != 1 && channels != 3) throw FormatError("image must have 1 or 3 channels");
  if (samples.size() != width * height * channels) {
    throw FormatError("image sample count does not match its dimensions");
  }
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  const std::string magic = read_token(in);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError(path.string() + ": unsupported image type '" + magic + "'");
  }
  const std::size_t w = parse_dim(read_token(in), "width");
  const std::size_t h = parse_dim(read_token(in), "height");
  const std::size_t maxval = parse_dim(read_token(in), "maxval");
  if (maxval == 0 || maxval > 255) {
    throw FormatError(path.string() + ": only 8-bit images are supported");
  }
  Image img(w, h, channels);
  in.read(reinterpret_cast<char*>(img.samples.data()),
          static_cast<std::streamsize>(img.samples.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.samples.size()) {
    throw FormatError(path.string() + ": truncated image data");
  }
  img.validate();
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& image) {
  image.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write image " + path.string());
  out << (image.channels == 1 ? "P5" : "P6") << '\n'
      << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.samples.data()),
            static_cast<std::streamsize>(image.samples.size()));
  if (!out) throw FormatError("failed writing image " + path.string());
}

std::string to_string(HashAlgorithm a) {
  switch (a) {
    case HashAlgorithm::kAverage: return "ahash";
    case HashAlgorithm::kPerceptual: return "phash";
    case HashAlgorithm::kDifference: return "dhash";
    case HashAlgorithm::kWavelet: return "whash";
    case HashAlgorithm::kColor: return "colorhash";
  }
  return "unknown";
}

HashAlgorithm parse_hash_algorithm(const std::string& name) {
  for (HashAlgorithm a : kAllHashes) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown hash algorithm '" + name + "'");
}

std::size_t digest_bits(HashAlgorithm a) {
  return a == HashAlgorithm::kColor ? 48 : 64;
}

std::string HashDigest::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      nibble <<= 1;
      if (i + k < bits.size() && bits[i + k]) nibble |= 1;
    }
    out.push_back(kDigits[nibble]);
  }
  return out;
}

HashDigest average_hash(const Image& img) {
  const Plane p = resized_gray(img, 8, 8);
  std::int64_t sum = 0;
  for (auto v : p) sum += v;
  HashDigest d = digest(HashAlgorithm::kAverage);
  // pixel > mean  <=>  64 * pixel > sum
  for (auto v : p) d.bits.push_back(64 * v > sum ? 1 : 0);
  return d;
}

HashDigest difference_hash(const Image& img) {
  const Plane p = resized_gray(img, 9, 8);
  HashDigest d = digest(HashAlgorithm::kDifference);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      d.bits.push_back(p[r * 9 + c] > p[r * 9 + c + 1] ? 1 : 0);
    }
  }
  return d;
}

HashDigest perceptual_hash(const Image& img) {
  constexpr std::size_t kN = 32;
  constexpr std::size_t kK = 8;
  const Plane p = resized_gray(img, kN, kN);
  std::int64_t sum = 0;
  for (auto v : p) sum += v;
  // Mean-centred samples scaled by 1024; exact integers.
  std::vector<double> f(kN * kN);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = static_cast<double>(static_cast<std::int64_t>(kN * kN) * p[i] - sum);
  }
  // Unnormalized type-II DCT, top-left 8x8 block.
  std::vector<double> basis(kK * kN);
  for (std::size_t u = 0; u < kK; ++u) {
    for (std::size_t x = 0; x < kN; ++x) {
      basis[u * kN + x] = std::cos(std::numbers::pi * static_cast<double>((2 * x + 1) * u) /
                                   static_cast<double>(2 * kN));
    }
  }
  std::vector<double> rows(kN * kK);  // rows(y, u) = sum_x f(y, x) basis(u, x)
  for (std::size_t y = 0; y < kN; ++y) {
    for (std::size_t u = 0; u < kK; ++u) {
      double acc = 0.0;
      for (std::size_t x = 0; x < kN; ++x) acc += f[y * kN + x] * basis[u * kN + x];
      rows[y * kK + u] = acc;
    }
  }
  std::vector<double> coef(kK * kK);
  for (std::size_t v = 0; v < kK; ++v) {
    for (std::size_t u = 0; u < kK; ++u) {
      double acc = 0.0;
      for (std::size_t y = 0; y < kN; ++y) acc += rows[y * kK + u] * basis[v * kN + y];
      coef[v * kK + u] = acc;
    }
  }
  // Snap to a grid relative to the largest coefficient so that values which
  // are zero in exact arithmetic compare as zero.
  double scale = 0.0;
  for (double c : coef) scale = std::max(scale, std::abs(c));
  std::vector<std::int64_t> q(coef.size(), 0);
  if (scale > 0.0) {
    for (std::size_t i = 0; i < coef.size(); ++i) {
      q[i] = std::llround(coef[i] / scale * 1e9);
    }
  }
  q[0] = 0;  // DC of a mean-centred block
  const std::int64_t median = lower_median(std::vector<std::int64_t>(q.begin() + 1, q.end()));
  HashDigest d = digest(HashAlgorithm::kPerceptual);
  d.bits.push_back(0);
  for (std::size_t i = 1; i < q.size(); ++i) d.bits.push_back(q[i] > median ? 1 : 0);
  return d;
}

HashDigest wavelet_hash(const Image& img) {
  const Plane p = resized_gray(img, 64, 64);
  // Three Haar levels leave the LL band as 8x8 block sums.
  std::vector<std::int64_t> ll(64, 0);
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 64; ++x) ll[(y / 8) * 8 + x / 8] += p[y * 64 + x];
  }
  const std::int64_t median = lower_median(ll);
  HashDigest d = digest(HashAlgorithm::kWavelet);
  for (auto v : ll) d.bits.push_back(v > median ? 1 : 0);
  return d;
}

HashDigest color_hash(const Image& img) {
  img.validate();
  const std::size_t n = img.width * img.height;
  // Fixed-point HSV: hue in 1e-6 degrees, saturation in 1e-9, value as the
  // raw channel maximum. Integer planes keep the area resize exact.
  std::array<Plane, 3> hsv;
  for (auto& ch : hsv) ch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = &img.samples[i * img.channels];
    const std::int64_t r = px[0];
    const std::int64_t g = img.channels == 3 ? px[1] : px[0];
    const std::int64_t b = img.channels == 3 ? px[2] : px[0];
    const std::int64_t mx = std::max({r, g, b});
    const std::int64_t mn = std::min({r, g, b});
    const std::int64_t delta = mx - mn;
    // Hue sector offset and signed numerator, in units of 60 degrees.
    std::int64_t h = 0;
    if (delta > 0) {
      constexpr std::int64_t kDeg = 60'000'000;
      std::int64_t sector = 0;
      std::int64_t num = 0;
      if (mx == r) {
        num = g - b;
        sector = num < 0 ? 6 : 0;
      } else if (mx == g) {
        num = b - r;
        sector = 2;
      } else {
        num = r - g;
        sector = 4;
      }
      h = sector * kDeg + (num * kDeg * 2 + (num >= 0 ? delta : -delta)) / (2 * delta);
    }
    hsv[0][i] = h;
    hsv[1][i] = mx == 0 ? 0 : (delta * 2'000'000'000 + mx) / (2 * mx);
    hsv[2][i] = mx;
  }
  HashDigest d = digest(HashAlgorithm::kColor);
  d.replicated_gray = img.channels == 1;
  for (const auto& ch : hsv) {
    const auto cells = area_resize(ch, img.width, img.height, 4, 4);
    const std::int64_t median = lower_median(cells);
    for (auto v : cells) d.bits.push_back(v > median ? 1 : 0);
  }
  return d;
}

HashDigest compute_hash(HashAlgorithm algorithm, const Image& img) {
  switch (algorithm) {
    case HashAlgorithm::kAverage: return average_hash(img);
    case HashAlgorithm::kPerceptual: return perceptual_hash(img);
    case HashAlgorithm::kDifference: return difference_hash(img);
    case HashAlgorithm::kWavelet: return wavelet_hash(img);
    case HashAlgorithm::kColor: return color_hash(img);
  }
  throw ConfigError("unknown hash algorithm");
}

std::size_t hamming(const HashDigest& a, const HashDigest& b) {
  if (a.algorithm != b.algorithm) {
    throw ConfigError("cannot compare " + to_string(a.algorithm) + " with " +
                      to_string(b.algorithm));
  }
  if (a.bits.size() != b.bits.size()) throw ConfigError("digest lengths differ");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) d += a.bits[i] != b.bits[i] ? 1 : 0;
  return d;
}

std::string CorpusReport::to_csv() const {
  std::ostringstream os;
  os << "file";
  for (HashAlgorithm a : kAllHashes) os << ',' << to_string(a);
  os << ",rmse\n";
  for (const auto& p : pairs) {
    os << p.name;
    for (std::size_t d : p.distance) os << ',' << d;
    os << ',' << format_double(p.rmse) << '\n';
  }
  os << "mean";
  for (double m : mean) os << ',' << format_double(m);
  os << ',' << format_double(mean_rmse) << "\nse";
  for (double s : se) os << ',' << format_double(s);
  os << ',' << format_double(se_rmse) << '\n';
  return os.str();
}

CorpusReport corpus_report(const std::filesystem::path& dir_a,
                           const std::filesystem::path& dir_b) {
  auto list = [](const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
      throw FormatError("not a directory: " + dir.string());
    }
    std::set<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) {
        names.insert(e.path().filename().string());
      }
    }
    return names;
  };
  const auto a = list(dir_a);
  const auto b = list(dir_b);
  CorpusReport rep;
  std::array<std::vector<double>, kAllHashes.size()> dist;
  std::vector<double> rmse;
  for (const auto& name : a) {
    if (!b.count(name)) {
      rep.unmatched.push_back("a/" + name);
      continue;
    }
    const Image ia = read_pnm(dir_a / name);
    const Image ib = read_pnm(dir_b / name);
    CorpusPair pair;
    pair.name = name;
    for (std::size_t k = 0; k < kAllHashes.size(); ++k) {
      pair.distance[k] = hamming(compute_hash(kAllHashes[k], ia),
                                 compute_hash(kAllHashes[k], ib));
      dist[k].push_back(static_cast<double>(pair.distance[k]));
    }
    if (ia.width == ib.width && ia.height == ib.height && ia.channels == ib.channels) {
      double ss = 0.0;
      for (std::size_t i = 0; i < ia.samples.size(); ++i) {
        const double d = static_cast<double>(ia.samples[i]) - static_cast<double>(ib.samples[i]);
        ss += d * d;
      }
      pair.rmse = std::sqrt(ss / static_cast<double>(ia.samples.size()));
      rmse.push_back(pair.rmse);
    } else {
      pair.rmse = std::numeric_limits<double>::quiet_NaN();
    }
    rep.pairs.push_back(std::move(pair));
  }
  for (const auto& name : b) {
    if (!a.count(name)) rep.unmatched.push_back("b/" + name);
  }
  for (std::size_t k = 0; k < kAllHashes.size(); ++k) {
    std::tie(rep.mean[k], rep.se[k]) = mean_se(dist[k]);
  }
  std::tie(rep.mean_rmse, rep.se_rmse) = mean_se(rmse);
  return rep;
}

}  // namespace subnet

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

#include "subnet/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "subnet/errors.hpp"
#include "subnet/rng.hpp"

namespace subnet {

void Dataset::validate() const {
  if (inputs.rows() != labels.size()) {
    throw ConfigError("dataset has " + std::to_string(inputs.rows()) +
                      " rows but " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ConfigError("dataset is empty");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      throw ConfigError("label " + std::to_string(labels[i]) + " at row " +
                        std::to_string(i) + " is outside [0, " +
                        std::to_string(class_count) + ")");
    }
  }
  if (!inputs.all_finite()) throw ConfigError("dataset has non-finite inputs");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs = select_rows(inputs, indices);
  out.class_count = class_count;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  return out;
}

namespace {

void shuffle_rows(Dataset& data, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  data = data.subset(order);
}

std::size_t class_share(std::size_t n, std::size_t k, std::size_t c) {
  return n / k + (c < n % k ? 1 : 0);
}

}  // namespace

Dataset spiral(std::size_t n, double noise_sd, double turns, std::uint64_t seed) {
  if (n < 2) throw ConfigError("spiral needs n >= 2");
  if (!(noise_sd >= 0.0)) throw ConfigError("spiral noise must be >= 0");
  if (!(turns > 0.0)) throw ConfigError("spiral turns must be > 0");
  Dataset d;
  d.class_count = 2;
  d.inputs = Matrix(n, 2);
  Rng rng(derive_seed(seed, Stream::kData));
  std::size_t row = 0;
  for (int c = 0; c < 2; ++c) {
    const std::size_t m = class_share(n, 2, static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < m; ++i) {
      const double t = m == 1 ? 0.1 : 0.1 + 0.9 * static_cast<double>(i) /
                                                static_cast<double>(m - 1);
      const double angle = t * turns * std::numbers::pi + c * std::numbers::pi;
      d.inputs(row, 0) = t * std::cos(angle) + noise_sd * rng.normal();
      d.inputs(row, 1) = t * std::sin(angle) + noise_sd * rng.normal();
      d.labels.push_back(c);
      ++row;
    }
  }
  shuffle_rows(d, derive_seed(seed, Stream::kData, 1));
  return d;
}

Dataset gaussian_blobs(std::size_t k, std::size_t n, double separation,
                       std::uint64_t seed, double sd) {
  if (k < 2) throw ConfigError("gaussian_blobs needs k >= 2");
  if (n == 0) throw ConfigError("gaussian_blobs needs n >= 1");
  if (!(sd >= 0.0)) throw ConfigError("blob standard deviation must be >= 0");
  Dataset d;
  d.class_count = k;
  d.inputs = Matrix(n, 2);
  Rng rng(derive_seed(seed, Stream::kData));
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                         static_cast<double>(k);
    for (std::size_t i = 0; i < class_share(n, k, c); ++i) {
      d.inputs(row, 0) = separation * std::cos(angle) + sd * rng.normal();
      d.inputs(row, 1) = separation * std::sin(angle) + sd * rng.normal();
      d.labels.push_back(static_cast<int>(c));
      ++row;
    }
  }
  shuffle_rows(d, derive_seed(seed, Stream::kData, 1));
  return d;
}

DataSplits split(const Dataset& data, std::array<double, 3> fractions,
                 std::uint64_t seed) {
  data.validate();
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

  const std::size_t n = data.size();
  // Split sizes: floor plus largest remainders.
  auto apportion = [&](std::size_t count, std::array<std::size_t, 3>& base,
                       std::array<double, 3>& frac) {
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double q = static_cast<double>(count) * fractions[s];
      base[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      frac[s] = q - static_cast<double>(base[s]);
      used += base[s];
    }
    return count - std::min(count, used);
  };
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> size_frac{};
  std::size_t extra = apportion(n, sizes, size_frac);
  {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return size_frac[a] > size_frac[b]; });
    for (std::size_t i = 0; i < extra; ++i) ++sizes[order[i % 3]];
  }

  // Per-class floors, then hand out each class's leftover items to the
  // splits still short of their size, neediest first.
  std::vector<std::vector<std::size_t>> by_class(data.class_count);
  for (std::size_t i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  std::vector<std::array<std::size_t, 3>> quota(data.class_count);
  std::vector<std::array<double, 3>> quota_frac(data.class_count);
  std::vector<std::size_t> leftover(data.class_count);
  std::array<std::size_t, 3> demand = sizes;
  for (std::size_t c = 0; c < data.class_count; ++c) {
    leftover[c] = apportion(by_class[c].size(), quota[c], quota_frac[c]);
    for (std::size_t s = 0; s < 3; ++s) demand[s] -= std::min(demand[s], quota[c][s]);
  }
  std::vector<std::size_t> class_order(data.class_count);
  std::iota(class_order.begin(), class_order.end(), std::size_t{0});
  std::stable_sort(class_order.begin(), class_order.end(),
                   [&](std::size_t a, std::size_t b) { return leftover[a] > leftover[b]; });
  for (std::size_t c : class_order) {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (demand[a] != demand[b]) return demand[a] > demand[b];
      return quota_frac[c][a] > quota_frac[c][b];
    });
    for (std::size_t i = 0; i < leftover[c]; ++i) {
      const std::size_t s = order[i % 3];
      ++quota[c][s];
      if (demand[s] > 0) --demand[s];
    }
  }

  Rng rng(derive_seed(seed, Stream::kSplit));
  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t c = 0; c < data.class_count; ++c) {
    auto& idx = by_class[c];
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      parts[s].insert(parts[s].end(), idx.begin() + static_cast<std::ptrdiff_t>(pos),
                      idx.begin() + static_cast<std::ptrdiff_t>(pos + quota[c][s]));
      pos += quota[c][s];
    }
  }
  static constexpr const char* kNames[] = {"train", "validation", "test"};
  for (std::size_t s = 0; s < 3; ++s) {
    std::sort(parts[s].begin(), parts[s].end());
    if (fractions[s] > 0.0 && parts[s].empty()) {
      throw ConfigError(std::string("split leaves the ") + kNames[s] + " set empty");
    }
  }
  return {data.subset(parts[0]), data.subset(parts[1]), data.subset(parts[2])};
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  auto fields = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::size_t cols = fields(line).size();
  if (cols < 2) throw FormatError(path.string() + ": need features and a label column");
  std::vector<double> values;
  Dataset d;
  std::size_t line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != cols) throw FormatError(where + ": expected " + std::to_string(cols) + " fields");
    try {
      for (std::size_t i = 0; i + 1 < cols; ++i) {
        std::size_t used = 0;
        values.push_back(std::stod(f[i], &used));
        if (used != f[i].size()) throw std::invalid_argument(f[i]);
      }
      std::size_t used = 0;
      const int label = std::stoi(f.back(), &used);
      if (used != f.back().size() || label < 0) throw std::invalid_argument(f.back());
      d.labels.push_back(label);
      max_label = std::max(max_label, label);
    } catch (const std::exception&) {
      throw FormatError(where + ": malformed value");
    }
  }
  if (d.labels.empty()) throw FormatError(path.string() + ": no data rows");
  d.inputs = Matrix(d.labels.size(), cols - 1, std::move(values));
  d.class_count = static_cast<std::size_t>(max_label + 1);
  return d;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write dataset " + path.string());
  out.precision(17);
  for (std::size_t c = 0; c < data.input_dim(); ++c) out << 'x' << c << ',';
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.inputs.row(r)) out << v << ',';
    out << data.labels[r] << '\n';
  }
  if (!out) throw FormatError("failed writing dataset " + path.string());
}

namespace {

constexpr char kMagic[4] = {'S', 'N', 'F', 'E'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

  std::vector<std::uint8_t> bytes;

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end)
      : bytes_(bytes), end_(end) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  bool done() const { return pos_ == end_; }
  void need(std::uint64_t n) const {
    if (n > end_ - pos_) throw FormatError("model file is truncated");
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint8_t activation_tag(Activation a) {
  switch (a) {
    case Activation::kRelu: return 0;
    case Activation::kTanh: return 1;
    case Activation::kIdentity: return 2;
  }
  return 255;
}

Activation activation_from_tag(std::uint8_t t) {
  switch (t) {
    case 0: return Activation::kRelu;
    case 1: return Activation::kTanh;
    case 2: return Activation::kIdentity;
    default: throw FormatError("unknown activation tag " + std::to_string(t));
  }
}

std::uint32_t checksum(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, data, static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const DenseNet& net, const NetMask* mask) {
  net.validate();
  if (mask) check_shape(*mask, net.shape());
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(net.depth()));
  for (const auto& layer : net.layers()) {
    w.u32(static_cast<std::uint32_t>(layer.weights.rows()));
    w.u32(static_cast<std::uint32_t>(layer.weights.cols()));
    w.u8(activation_tag(layer.activation));
    for (double v : layer.weights.data()) w.f64(v);
    for (double v : layer.bias) w.f64(v);
  }
  w.u8(mask ? 1 : 0);
  if (mask) {
    // One bit per weight, rows padded to whole bytes, most significant first.
    for (const auto& m : mask->layers) {
      for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c0 = 0; c0 < m.cols; c0 += 8) {
          std::uint8_t byte = 0;
          for (std::size_t k = 0; k < 8; ++k) {
            byte = static_cast<std::uint8_t>(byte << 1);
            if (c0 + k < m.cols && m(r, c0 + k)) byte |= 1;
          }
          w.u8(byte);
        }
      }
    }
  }
  w.u32(checksum(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

LoadedModel decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 2 + 4 + 1 + 4) throw FormatError("model file is truncated");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("not a model file (bad magic)");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= std::uint32_t{bytes[body + i]} << (8 * i);
  if (stored != checksum(bytes.data(), body)) {
    throw FormatError("model checksum mismatch");
  }
  Reader r(bytes, body);
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint16_t version = r.u16();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t depth = r.u32();
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < depth; ++l) {
    DenseLayer layer;
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    layer.activation = activation_from_tag(r.u8());
    r.need((std::uint64_t{rows} * cols + rows) * 8);
    layer.weights = Matrix(rows, cols);
    for (double& v : layer.weights.data()) v = r.f64();
    layer.bias.resize(rows);
    for (double& v : layer.bias) v = r.f64();
    layers.push_back(std::move(layer));
  }
  LoadedModel out;
  out.net = DenseNet(std::move(layers));
  out.net.validate();
  const std::uint8_t has_mask = r.u8();
  if (has_mask > 1) throw FormatError("bad mask flag");
  if (has_mask) {
    NetMask mask = NetMask::filled(out.net.shape(), 0);
    for (auto& m : mask.layers) {
      for (std::size_t row = 0; row < m.rows; ++row) {
        for (std::size_t c0 = 0; c0 < m.cols; c0 += 8) {
          const std::uint8_t byte = r.u8();
          for (std::size_t k = 0; k < 8 && c0 + k < m.cols; ++k) {
            m(row, c0 + k) = (byte >> (7 - k)) & 1;
          }
        }
      }
    }
    out.mask = std::move(mask);
  }
  if (!r.done()) throw FormatError("model file has trailing bytes");
  return out;
}

void save_model(const std::filesystem::path& path, const DenseNet& net,
                const NetMask* mask) {
  const auto bytes = encode_model(net, mask);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing model " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace subnet

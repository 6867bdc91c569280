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

// Brute-force reference implementations of the classification and diversity
// metrics, written independently of the library (long double accumulation,
// explicit loops, linear bin scans).

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "subnet/matrix.hpp"

namespace subnet::oracle {

using Real = long double;

inline std::size_t argmax_row(const Matrix& p, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.cols(); ++c) {
    if (p(r, c) > p(r, best)) best = c;
  }
  return best;
}

inline double accuracy(const Matrix& p, const std::vector<int>& y) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    if (static_cast<int>(argmax_row(p, r)) == y[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(p.rows());
}

inline double nll(const Matrix& p, const std::vector<int>& y, double floor = 1e-12) {
  Real total = 0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    Real q = p(r, static_cast<std::size_t>(y[r]));
    if (q < floor) q = floor;
    total -= std::log(q);
  }
  return static_cast<double>(total / p.rows());
}

// Bin b holds confidences in (b / B, (b + 1) / B]; confidence 0 goes to bin 0.
inline double ece(const Matrix& p, const std::vector<int>& y, std::size_t bins) {
  std::vector<Real> conf_sum(bins, 0);
  std::vector<Real> hit_sum(bins, 0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::size_t pred = argmax_row(p, r);
    const double conf = p(r, pred);
    std::size_t b = 0;
    while (b + 1 < bins &&
           conf > static_cast<double>(b + 1) / static_cast<double>(bins)) {
      ++b;
    }
    conf_sum[b] += conf;
    hit_sum[b] += (static_cast<int>(pred) == y[r]) ? 1 : 0;
    ++count[b];
  }
  Real total = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    total += std::fabs(hit_sum[b] - conf_sum[b]);
  }
  return static_cast<double>(total / p.rows());
}

inline double mean_kl(const Matrix& ref, const Matrix& pert, double floor = 1e-12) {
  Real total = 0;
  for (std::size_t r = 0; r < ref.rows(); ++r) {
    for (std::size_t c = 0; c < ref.cols(); ++c) {
      Real a = ref(r, c) < floor ? floor : ref(r, c);
      Real b = pert(r, c) < floor ? floor : pert(r, c);
      total += a * std::log(a / b);
    }
  }
  return static_cast<double>(total / ref.rows());
}

inline double pdr(const Matrix& a, const Matrix& b) {
  std::size_t diff = 0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (argmax_row(a, r) != argmax_row(b, r)) ++diff;
  }
  return static_cast<double>(diff) / static_cast<double>(a.rows());
}

// Per-class Pearson correlation across samples, averaged over classes where
// both columns vary. NaN when no class qualifies.
inline double correlation(const Matrix& a, const Matrix& b) {
  Real sum = 0;
  std::size_t used = 0;
  const Real n = a.rows();
  for (std::size_t c = 0; c < a.cols(); ++c) {
    Real ma = 0, mb = 0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      ma += a(r, c);
      mb += b(r, c);
    }
    ma /= n;
    mb /= n;
    Real sab = 0, saa = 0, sbb = 0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const Real da = a(r, c) - ma;
      const Real db = b(r, c) - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    if (saa == 0 || sbb == 0) continue;
    sum += sab / std::sqrt(saa * sbb);
    ++used;
  }
  if (used == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(sum / used);
}

}  // namespace subnet::oracle

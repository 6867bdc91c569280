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

#include "subnet/numeric.hpp"

#include <cmath>
#include <vector>

namespace subnet {

namespace {

// Non-overlapping expansion: the exact sum of `parts`.
class Expansion {
 public:
  void add(double x) {
    std::size_t out = 0;
    for (double p : parts_) {
      const double s = x + p;
      const double bp = s - x;
      const double err = (x - (s - bp)) + (p - bp);
      if (err != 0.0) parts_[out++] = err;
      x = s;
    }
    parts_.resize(out);
    if (x != 0.0) parts_.push_back(x);
  }

  // Correctly rounded value of the expansion, up to double rounding in
  // pathological near-tie cases.
  double value() const {
    double hi = 0.0;
    for (auto it = parts_.begin(); it != parts_.end(); ++it) hi += *it;
    // Recompute with the largest component last for accuracy.
    Expansion residual = *this;
    residual.add(-hi);
    double lo = 0.0;
    for (double p : residual.parts_) lo += p;
    return hi + lo;
  }

 private:
  std::vector<double> parts_;
};

}  // namespace

double exact_sum(std::span<const double> values) {
  Expansion e;
  for (double v : values) e.add(v);
  return e.value();
}

double exact_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  Expansion e;
  for (double v : values) e.add(v);
  const double q = e.value() / n;
  // Exact residual sum - n * q, then one correction step.
  const double prod = n * q;
  const double prod_err = std::fma(n, q, -prod);
  e.add(-prod);
  e.add(-prod_err);
  return q + e.value() / n;
}

}  // namespace subnet

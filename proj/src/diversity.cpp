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

#include "subnet/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "subnet/ensemble.hpp"
#include "subnet/errors.hpp"
#include "subnet/rng.hpp"

namespace subnet {

namespace {

void check_pair(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("prediction shapes differ");
}

std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(v.size()))};
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Correlation pairwise_correlation_detail(const Matrix& a, const Matrix& b) {
  check_pair(a, b);
  Correlation out;
  const std::size_t n = a.rows();
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      ma += a(r, c);
      mb += b(r, c);
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double da = a(r, c) - ma;
      const double db = b(r, c) - mb;
      cov += da * db;
      va += da * da;
      vb += db * db;
    }
    if (n == 0 || va == 0.0 || vb == 0.0) {
      out.excluded_classes.push_back(c);
      continue;
    }
    total += cov / (std::sqrt(va) * std::sqrt(vb));
    ++used;
  }
  out.value = used == 0 ? std::numeric_limits<double>::quiet_NaN()
                        : total / static_cast<double>(used);
  return out;
}

double pairwise_correlation(const Matrix& a, const Matrix& b) {
  return pairwise_correlation_detail(a, b).value;
}

double prediction_disagreement(const Matrix& a, const Matrix& b) {
  check_pair(a, b);
  if (a.rows() == 0) return 0.0;
  std::size_t diff = 0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    diff += argmax(a.row(r)) != argmax(b.row(r)) ? 1 : 0;
  }
  return static_cast<double>(diff) / static_cast<double>(a.rows());
}

DiversityReport diversity_report(std::span<const Matrix> members) {
  const std::size_t m = members.size();
  if (m < 2) throw ConfigError("diversity report needs >= 2 members");
  DiversityReport rep;
  rep.correlation = Matrix(m, m, 1.0);
  rep.kl = Matrix(m, m, 0.0);
  rep.pdr = Matrix(m, m, 0.0);
  std::vector<double> corr, kl, pdr;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      rep.kl(i, j) = mean_kl(members[i], members[j]);
      kl.push_back(rep.kl(i, j));
      if (j < i) continue;
      const Correlation c = pairwise_correlation_detail(members[i], members[j]);
      if (!c.excluded_classes.empty()) rep.flagged.emplace_back(i, j);
      rep.correlation(i, j) = rep.correlation(j, i) = c.value;
      if (!std::isnan(c.value)) corr.push_back(c.value);
      rep.pdr(i, j) = rep.pdr(j, i) = prediction_disagreement(members[i], members[j]);
      pdr.push_back(rep.pdr(i, j));
    }
  }
  std::tie(rep.mean_correlation, rep.se_correlation) = mean_se(corr);
  std::tie(rep.mean_kl, rep.se_kl) = mean_se(kl);
  std::tie(rep.mean_pdr, rep.se_pdr) = mean_se(pdr);
  return rep;
}

std::vector<double> saliency(const DenseNet& net, std::span<const double> x,
                             std::optional<std::size_t> cls) {
  if (x.size() != net.input_dim()) throw ShapeError("saliency input has wrong size");
  std::size_t c = 0;
  if (cls) {
    c = *cls;
  } else {
    const Matrix logits = forward(net, Matrix(1, x.size(), {x.begin(), x.end()}));
    c = argmax(logits.row(0));
  }
  return unit_input_gradient(net, x, net.depth() - 1, c);
}

std::vector<double> smoothgrad(const DenseNet& net, std::span<const double> x,
                               double sigma, std::size_t n, std::uint64_t seed,
                               std::optional<std::size_t> cls) {
  if (n == 0) throw ConfigError("smoothgrad needs n >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("smoothgrad sigma must be >= 0");
  if (x.size() != net.input_dim()) throw ShapeError("smoothgrad input has wrong size");
  if (!cls) {
    const Matrix logits = forward(net, Matrix(1, x.size(), {x.begin(), x.end()}));
    cls = argmax(logits.row(0));
  }
  if (sigma == 0.0) return saliency(net, x, cls);
  Rng rng(derive_seed(seed, Stream::kNoise));
  std::vector<double> sum(x.size(), 0.0);
  std::vector<double> xi(x.size());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < x.size(); ++i) xi[i] = x[i] + sigma * rng.normal();
    const auto g = saliency(net, xi, cls);
    for (std::size_t i = 0; i < g.size(); ++i) sum[i] += g[i];
  }
  for (double& v : sum) v /= static_cast<double>(n);
  return sum;
}

FeatureVisualization feature_visualization(const DenseNet& net,
                                           std::size_t layer, std::size_t unit,
                                           std::size_t steps, double step_size,
                                           double l2_bound, std::uint64_t seed) {
  if (layer >= net.depth() || unit >= net.layer(layer).weights.rows()) {
    throw ConfigError("feature visualization unit is out of range");
  }
  if (!(l2_bound > 0.0) || !(step_size > 0.0)) {
    throw ConfigError("feature visualization needs positive step size and bound");
  }
  auto project = [l2_bound](std::vector<double>& v) {
    const double n = norm(v);
    if (n > l2_bound) {
      for (double& x : v) x *= l2_bound / n;
    }
  };
  FeatureVisualization out;
  Rng rng(derive_seed(seed, Stream::kInit));
  out.input.resize(net.input_dim());
  for (double& x : out.input) x = 0.01 * l2_bound * rng.normal();
  project(out.input);
  out.trace.push_back(unit_preactivation(net, out.input, layer, unit));
  for (std::size_t s = 0; s < steps; ++s) {
    const auto g = unit_input_gradient(net, out.input, layer, unit);
    const double gn = norm(g);
    if (gn > 0.0) {
      for (std::size_t i = 0; i < g.size(); ++i) out.input[i] += step_size * g[i] / gn;
      project(out.input);
    }
    out.trace.push_back(unit_preactivation(net, out.input, layer, unit));
  }
  return out;
}

std::pair<Gradient, Gradient> random_directions(const DenseNet& net,
                                                std::uint64_t seed) {
  Gradient delta = Gradient::zeros_like(net);
  Gradient eta = Gradient::zeros_like(net);
  Rng rng(derive_seed(seed, Stream::kDirection));
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& w = net.layer(l).weights.data();
    auto& d = delta.weights[l].data();
    auto& e = eta.weights[l].data();
    for (double& v : d) v = rng.normal();
    for (double& v : e) v = rng.normal();
    const double wn = norm(w);
    // Orthogonalize within the layer, so the full vectors are orthogonal too.
    const double dn = norm(d);
    if (wn == 0.0 || dn == 0.0) {
      std::fill(d.begin(), d.end(), 0.0);
      std::fill(e.begin(), e.end(), 0.0);
      continue;
    }
    for (double& v : d) v /= dn;
    double dot = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) dot += d[i] * e[i];
    for (std::size_t i = 0; i < d.size(); ++i) e[i] -= dot * d[i];
    const double en = norm(e);
    for (double& v : d) v *= wn;
    if (en == 0.0) {
      std::fill(e.begin(), e.end(), 0.0);
    } else {
      for (double& v : e) v *= wn / en;
    }
  }
  return {std::move(delta), std::move(eta)};
}

Matrix landscape_slice(const DenseNet& net, const LossFn& loss,
                       const Gradient& delta, const Gradient& eta,
                       std::span<const double> alphas,
                       std::span<const double> betas) {
  if (alphas.empty() || betas.empty()) throw ConfigError("landscape grid is empty");
  const Gradient zero = Gradient::zeros_like(net);
  for (const Gradient* g : {&delta, &eta}) {
    if (g->weights.size() != zero.weights.size()) {
      throw ShapeError("direction does not match network depth");
    }
    for (std::size_t l = 0; l < zero.weights.size(); ++l) {
      if (!g->weights[l].same_shape(zero.weights[l]) ||
          g->bias[l].size() != zero.bias[l].size()) {
        throw ShapeError("direction does not match layer " + std::to_string(l));
      }
    }
  }
  Matrix out(alphas.size(), betas.size());
  DenseNet moved = net;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    for (std::size_t j = 0; j < betas.size(); ++j) {
      for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& w = net.layer(l).weights.data();
        auto& mw = moved.layer(l).weights.data();
        const auto& dw = delta.weights[l].data();
        const auto& ew = eta.weights[l].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
          mw[k] = w[k] + alphas[i] * dw[k] + betas[j] * ew[k];
        }
        const auto& b = net.layer(l).bias;
        auto& mb = moved.layer(l).bias;
        for (std::size_t k = 0; k < b.size(); ++k) {
          mb[k] = b[k] + alphas[i] * delta.bias[l][k] + betas[j] * eta.bias[l][k];
        }
      }
      out(i, j) = loss(moved);
    }
  }
  return out;
}

Matrix landscape_slice(const DenseNet& net, const Dataset& data,
                       const Gradient& delta, const Gradient& eta,
                       std::span<const double> alphas,
                       std::span<const double> betas) {
  return landscape_slice(
      net,
      [&data](const DenseNet& n) {
        return cross_entropy(predict_proba(n, data.inputs), data.labels);
      },
      delta, eta, alphas, betas);
}

}  // namespace subnet

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

// Synthetic images shared by the hash tests and the acceptance run.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "subnet/phash.hpp"
#include "subnet/rng.hpp"

namespace subnet::testing {

inline Image gray(std::size_t w, std::size_t h, auto&& f) {
  Image img(w, h, 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>(f(x, y));
  }
  return img;
}

inline Image noise_image(std::size_t w, std::size_t h, std::size_t channels, Rng& rng) {
  Image img(w, h, channels);
  for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Golden corpus: deterministic synthetic images.
inline Image golden_gradient() {
  return gray(40, 30, [](auto x, auto y) { return (x * 5 + y * 3) % 256; });
}
inline Image golden_rings() {
  return gray(48, 48, [](auto x, auto y) {
    const double dx = static_cast<double>(x) - 20.0, dy = static_cast<double>(y) - 27.0;
    return static_cast<int>(std::sqrt(dx * dx + dy * dy) * 12.0) % 256;
  });
}
inline Image golden_color() {
  Image img(36, 20, 3);
  for (std::size_t y = 0; y < 20; ++y) {
    for (std::size_t x = 0; x < 36; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>(x * 7);
      img.at(x, y, 1) = static_cast<std::uint8_t>(y * 12);
      img.at(x, y, 2) = static_cast<std::uint8_t>((x * y) % 256);
    }
  }
  return img;
}

}  // namespace subnet::testing

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

#pragma once

#include <span>

namespace subnet {

// Sum of `values` rounded once from the exact real sum (error-free
// expansion accumulation). Independent of input order.
double exact_sum(std::span<const double> values);

// Arithmetic mean rounded from the exact real mean. Identical inputs return
// that value exactly.
double exact_mean(std::span<const double> values);

}  // namespace subnet

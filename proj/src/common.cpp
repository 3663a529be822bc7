// Copyright 2026 The rate-geo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rate/common.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace rate {

double normalize_log_weights(std::span<double> log_weights) {
  const double max = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(max)) throw RuntimeError("log weights have no finite maximum");
  double total = 0.0;
  for (double& w : log_weights) {
    w = std::exp(w - max);
    total += w;
  }
  for (double& w : log_weights) w /= total;
  return max + std::log(total);
}

int sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  assert(!log_weights.empty());
  if (log_weights.size() == 1) return 0;
  const double max = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(max)) throw RuntimeError("log weights have no finite maximum");

  std::vector<double> cumulative(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    total += std::exp(log_weights[i] - max);
    cumulative[i] = total;
  }
  const double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (u < cumulative[i]) return static_cast<int>(i);
  }
  // u == total can only come from rounding; fall back to the last positive bin.
  for (std::size_t i = cumulative.size(); i-- > 0;) {
    if (std::exp(log_weights[i] - max) > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(cumulative.size()) - 1;
}

}  // namespace rate

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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace rate {

/// Bad input: malformed records, violated preconditions, inconsistent files.
/// The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure during a computation on valid input (corrupt state, non-finite
/// likelihood). The CLI maps it to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// (latitude, longitude) in degrees.
struct Coords {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const Coords&, const Coords&) = default;
};

inline double squared_distance(const Coords& a, const Coords& b) {
  const double dlat = a.lat - b.lat;
  const double dlon = a.lon - b.lon;
  return dlat * dlat + dlon * dlon;
}

/// splitmix64 finalizer; turns (master seed, stream index) into an
/// independent seed for a per-document RNG.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t x = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Normalizes unnormalized log weights in place into probabilities.
/// Returns the log normalizer (log-sum-exp of the input).
double normalize_log_weights(std::span<double> log_weights);

/// Draws an index from unnormalized log weights. A single-entry input
/// returns 0 without consuming randomness.
int sample_log_categorical(std::span<const double> log_weights, Rng& rng);

}  // namespace rate

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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rate/corpus.hpp"
#include "rate/model.hpp"

namespace rate {

/// Every quantity drawn while generating a synthetic corpus.
struct GroundTruth {
  std::vector<double> psi;                                       // [i]
  std::vector<std::vector<std::vector<double>>> phi;             // [i][j][r]
  std::vector<std::vector<std::vector<double>>> feature_dists;   // [i][u][v]
  std::vector<std::vector<double>> region_dists;                 // [i][c]
  std::vector<Coords> mu;
  std::vector<double> sigma2;

  std::vector<int> area;                   // p_k
  std::vector<std::vector<double>> theta;  // [k][j]
  std::vector<std::vector<int>> z;         // [k][l]
  std::vector<std::vector<int>> words;     // [k][l], generator word ids
  std::vector<std::vector<int>> features;  // [k][u], generator category ids
  std::vector<int> region;                 // c_k, generator region ids
  std::vector<Coords> coords;              // y_k (after range clamping)
};

struct SyntheticCorpus {
  std::vector<RawRecord> records;
  GroundTruth truth;
  std::vector<std::string> feature_names;
};

struct SyntheticDims {
  int docs = 100;
  int tokens_per_doc = 10;
  int vocab = 100;
  std::vector<int> feature_sizes{4, 4};  // C_u for the F categorical features
  int regions = 4;
};

/// "w0007"-style token for generator word id r.
std::string word_token(int r, int vocab);
std::string category_token(int v, int size);
std::string region_token(int c, int size);
std::vector<std::string> synthetic_feature_names(int features);

/// Draws from Dir(concentration * 1_n); stable for concentration << 1.
std::vector<double> sample_dirichlet(double concentration, int n, Rng& rng);
int sample_discrete(const std::vector<double>& probs, Rng& rng);

/// Runs the full generative process: psi, then per area phi, f, f~, mu,
/// sigma^2, then per document p, theta, z, w, x, c, y.
SyntheticCorpus forward_sample(const Hyperparams& hp, const SyntheticDims& dims, std::uint64_t seed);

struct ScenarioConfig {
  int areas = 3;
  double spread_deg = 10.0;
  double sigma_deg = 0.5;
  int docs = 1000;
  int tokens_per_doc = 12;
  int vocab = 500;
  std::vector<int> feature_sizes{8, 8};
  int topics = 1;
  double region_smoothing = 0.0;       // 0 makes the region label equal the area
  double area_concentration = 50.0;    // Dir prior for psi
  double topic_concentration = 1.0;    // Dir prior for theta
  double word_concentration = 0.1;     // Dir prior inside an area's word block
  double feature_concentration = 0.5;  // Dir prior for f
  double word_leak = 0.05;             // mass spread uniformly over the whole vocabulary
  Coords origin{40.0, 0.0};
  std::uint64_t seed = 1;
};

/// Generative process with centers on a grid spaced `spread_deg` apart,
/// fixed sigma, identity region rows and disjoint word blocks per area.
/// Requires spread_deg > 4 sigma_deg.
SyntheticCorpus separated_scenario(const ScenarioConfig& config);

/// Mean latitude of the scenario's grid centers.
double scenario_latitude(const ScenarioConfig& config);

nlohmann::json truth_to_json(const GroundTruth& truth);

}  // namespace rate

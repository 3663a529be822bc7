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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rate/common.hpp"
#include "rate/corpus.hpp"

namespace rate {

/// How the area conditional is evaluated.
///  - PaperLiteral: area prior is the rising factorial of the area's word
///    total over the document length, as printed in the model write-up.
///  - JointRatio: area prior is (documents in area + gamma), the ratio of
///    collapsed joints implied by p ~ Mul(psi), psi ~ Dir(gamma).
/// Every other factor is shared by both modes.
enum class ConditionalMode { PaperLiteral, JointRatio };

std::string to_string(ConditionalMode mode);
ConditionalMode conditional_mode_from_string(const std::string& s);

struct Hyperparams {
  int areas = 30;   // L
  int topics = 1;   // T
  std::optional<double> alpha;  // defaults to 50 / (L T)
  double beta = 0.01;
  double gamma = 0.01;
  /// Symmetric Dirichlet prior per categorical feature, the last entry being
  /// the region feature. Empty means `default_delta` everywhere.
  std::vector<double> delta;
  double default_delta = 0.01;
  double lambda = 0.0;  // ridge weight on sigma in the M-step objective

  // Generative priors for mu ~ N(a, b^2 I) and sigma^2 ~ Gamma(c, d)
  // (shape, rate). Only the synthetic generator reads these.
  Coords prior_mean{48.0, 10.0};
  double prior_scale = 10.0;
  double gamma_shape = 2.0;
  double gamma_rate = 4.0;

  int samples = 10;  // S
  int burn_in = 100;
  int thin = 1;
  int em_iterations = 10;
  int test_sweeps = 50;
  double sigma2_floor = 1e-4;
  bool reseed_empty_areas = false;
  ConditionalMode mode = ConditionalMode::JointRatio;
  std::uint64_t seed = 1;

  double alpha_value() const { return alpha.value_or(50.0 / (static_cast<double>(areas) * topics)); }

  /// Throws ValidationError on out-of-domain values.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Dimensions and resolved prior scalars shared by the samplers and the
/// collapsed joint.
struct Priors {
  int areas = 1;
  int topics = 1;
  int vocab = 0;
  std::vector<int> categories;  // C_u for u in [0, F]; last is the region feature
  double alpha = 1.0;
  double beta = 0.01;
  double gamma = 0.01;
  std::vector<double> delta;    // same length as categories

  int num_features() const { return static_cast<int>(categories.size()) - 1; }

  static Priors resolve(const Hyperparams& hp, const CorpusSchema& schema);
};

/// Sufficient statistics over (z, p). Layouts:
///   topic_area_word   [j][i][r]  -> (j * L + i) * V + r
///   topic_area_total  [j][i]     -> j * L + i
///   area_feature_cat  [u][i][v]  -> area_feature_cat[u][i * C_u + v]
struct CountTensors {
  int areas = 0;
  int topics = 0;
  int vocab = 0;
  std::vector<int> categories;

  std::vector<int> topic_area_word;
  std::vector<int> topic_area_total;
  std::vector<int> area_word_total;
  std::vector<int> area_doc_count;
  std::vector<std::vector<int>> area_feature_cat;

  CountTensors() = default;
  CountTensors(int areas, int topics, int vocab, std::vector<int> categories);

  int& word(int j, int i, int r) { return topic_area_word[(static_cast<std::size_t>(j) * areas + i) * vocab + r]; }
  int word(int j, int i, int r) const { return topic_area_word[(static_cast<std::size_t>(j) * areas + i) * vocab + r]; }
  int& topic_total(int j, int i) { return topic_area_total[static_cast<std::size_t>(j) * areas + i]; }
  int topic_total(int j, int i) const { return topic_area_total[static_cast<std::size_t>(j) * areas + i]; }
  int& feature(int u, int i, int v) { return area_feature_cat[u][static_cast<std::size_t>(i) * categories[u] + v]; }
  int feature(int u, int i, int v) const { return area_feature_cat[u][static_cast<std::size_t>(i) * categories[u] + v]; }

  friend bool operator==(const CountTensors&, const CountTensors&) = default;
};

/// Category id of feature u for a training document, u == F being the region.
inline int observed_category(const Document& doc, int u) {
  return u < static_cast<int>(doc.feature_values.size()) ? doc.feature_values[u] : doc.region.value();
}

struct SamplerState {
  std::vector<std::vector<int>> z;          // [k][l]
  std::vector<int> p;                       // [k]
  std::vector<std::vector<int>> doc_topic;  // [k][j]
  CountTensors counts;
  Rng rng;
};

struct AreaGaussians {
  std::vector<Coords> mu;
  std::vector<double> sigma2;

  int size() const { return static_cast<int>(mu.size()); }
  friend bool operator==(const AreaGaussians&, const AreaGaussians&) = default;
};

/// The frozen prediction artifact.
struct TrainedModel {
  Hyperparams hyperparams;
  CorpusSchema schema;
  CountTensors counts;
  AreaGaussians gaussians;
  std::vector<std::vector<double>> region_posterior;  // [i][C]
  std::vector<Coords> region_centers;  // K-means cell centers, empty unless regions were built from coordinates

  Priors priors() const { return Priors::resolve(hyperparams, schema); }
  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Random initial assignments (p uniform over areas, z uniform over topics)
/// with consistent counts. Every document must carry a region and coords.
SamplerState init_state(const std::vector<Document>& corpus, const Priors& priors, std::uint64_t seed);

/// Counts recomputed from scratch from assignments.
CountTensors recount(const std::vector<Document>& corpus, const std::vector<std::vector<int>>& z,
                     const std::vector<int>& p, const Priors& priors);

struct Discrepancy {
  std::string tensor;
  std::vector<int> index;
  long long expected = 0;
  long long actual = 0;
};

/// Compares every tensor against a from-scratch recount. Empty result means
/// the state is consistent.
std::vector<Discrepancy> audit_counts(const SamplerState& state, const std::vector<Document>& corpus,
                                      const Priors& priors);
std::string describe(const Discrepancy& d);

/// f~[i][C] = (m[i][F][C] + delta_F) / sum_C' (m[i][F][C'] + delta_F).
std::vector<std::vector<double>> region_posterior(const CountTensors& counts, const Priors& priors);

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

inline constexpr int kModelVersion = 1;
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace rate

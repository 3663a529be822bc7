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

#include "rate/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rate {

using nlohmann::json;

namespace {

std::string padded(char prefix, int value, int size, int min_width) {
  int width = 1;
  for (int n = std::max(size - 1, 0); n >= 10; n /= 10) ++width;
  width = std::max(width, min_width);
  std::string digits = std::to_string(value);
  return prefix + std::string(std::max(0, width - static_cast<int>(digits.size())), '0') + digits;
}

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

Coords clamp_coords(Coords c) {
  c.lat = std::clamp(c.lat, -90.0, 90.0);
  c.lon = std::fmod(c.lon + 180.0, 360.0);
  if (c.lon < 0.0) c.lon += 360.0;
  c.lon -= 180.0;
  return c;
}

std::vector<double> feature_deltas(const Hyperparams& hp, int features) {
  if (hp.delta.size() == static_cast<std::size_t>(features) + 1) return hp.delta;
  return std::vector<double>(features + 1, hp.default_delta);
}

// Per-document steps of the generative process, shared by both generators.
void generate_documents(GroundTruth& truth, int docs, int tokens, int topics, double alpha, Rng& rng) {
  truth.area.resize(docs);
  truth.theta.resize(docs);
  truth.z.resize(docs);
  truth.words.resize(docs);
  truth.features.resize(docs);
  truth.region.resize(docs);
  truth.coords.resize(docs);
  const std::size_t features = truth.feature_dists.empty() ? 0 : truth.feature_dists.front().size();
  for (int k = 0; k < docs; ++k) {
    const int p = sample_discrete(truth.psi, rng);
    truth.area[k] = p;
    truth.theta[k] = sample_dirichlet(alpha, topics, rng);
    truth.z[k].resize(tokens);
    truth.words[k].resize(tokens);
    for (int l = 0; l < tokens; ++l) {
      truth.z[k][l] = sample_discrete(truth.theta[k], rng);
      truth.words[k][l] = sample_discrete(truth.phi[p][truth.z[k][l]], rng);
    }
    truth.features[k].resize(features);
    for (std::size_t u = 0; u < features; ++u) truth.features[k][u] = sample_discrete(truth.feature_dists[p][u], rng);
    truth.region[k] = sample_discrete(truth.region_dists[p], rng);
    const double sd = std::sqrt(truth.sigma2[p]);
    const Coords raw{truth.mu[p].lat + sd * normal(rng), truth.mu[p].lon + sd * normal(rng)};
    truth.coords[k] = clamp_coords(raw);
  }
}

std::vector<RawRecord> render_records(const GroundTruth& truth, int vocab, const std::vector<int>& feature_sizes,
                                      int regions, const std::vector<std::string>& names) {
  std::vector<RawRecord> records(truth.area.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    RawRecord& rec = records[k];
    for (std::size_t l = 0; l < truth.words[k].size(); ++l) {
      if (l > 0) rec.text += ' ';
      rec.text += word_token(truth.words[k][l], vocab);
    }
    for (std::size_t u = 0; u < names.size(); ++u) {
      rec.categorical.emplace(names[u], category_token(truth.features[k][u], feature_sizes[u]));
    }
    rec.region = region_token(truth.region[k], regions);
    rec.latitude = truth.coords[k].lat;
    rec.longitude = truth.coords[k].lon;
  }
  return records;
}

}  // namespace

std::string word_token(int r, int vocab) { return padded('w', r, vocab, 4); }
std::string category_token(int v, int size) { return padded('c', v, size, 2); }
std::string region_token(int c, int size) { return padded('r', c, size, 2); }

std::vector<std::string> synthetic_feature_names(int features) {
  const auto defaults = default_feature_names();
  std::vector<std::string> names;
  for (int u = 0; u < features; ++u) {
    names.push_back(u < static_cast<int>(defaults.size()) ? defaults[u] : "feature" + std::to_string(u));
  }
  return names;
}

std::vector<double> sample_dirichlet(double concentration, int n, Rng& rng) {
  std::vector<double> out(n);
  if (concentration >= 1.0) {
    std::gamma_distribution<double> gamma(concentration, 1.0);
    double total = 0.0;
    for (double& x : out) total += (x = gamma(rng));
    for (double& x : out) x /= total;
    return out;
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a), kept in log space so tiny shapes do
  // not underflow to an all-zero vector.
  std::gamma_distribution<double> gamma(concentration + 1.0, 1.0);
  for (double& x : out) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    x = std::log(gamma(rng)) + std::log(u) / concentration;
  }
  normalize_log_weights(out);
  return out;
}

int sample_discrete(const std::vector<double>& probs, Rng& rng) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

SyntheticCorpus forward_sample(const Hyperparams& hp, const SyntheticDims& dims, std::uint64_t seed) {
  hp.validate();
  if (dims.docs < 0 || dims.tokens_per_doc < 0 || dims.vocab < 1 || dims.regions < 1) {
    throw ValidationError("synthetic dimensions must be positive");
  }
  for (int c : dims.feature_sizes) {
    if (c < 1) throw ValidationError("feature category counts must be >= 1");
  }
  const int L = hp.areas, T = hp.topics, F = static_cast<int>(dims.feature_sizes.size());
  const auto delta = feature_deltas(hp, F);
  Rng rng(seed);

  GroundTruth t;
  t.psi = sample_dirichlet(hp.gamma, L, rng);
  t.phi.resize(L);
  t.feature_dists.resize(L);
  t.region_dists.resize(L);
  t.mu.resize(L);
  t.sigma2.resize(L);
  std::gamma_distribution<double> variance(hp.gamma_shape, 1.0 / hp.gamma_rate);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < T; ++j) t.phi[i].push_back(sample_dirichlet(hp.beta, dims.vocab, rng));
    for (int u = 0; u < F; ++u) t.feature_dists[i].push_back(sample_dirichlet(delta[u], dims.feature_sizes[u], rng));
    t.region_dists[i] = sample_dirichlet(delta[F], dims.regions, rng);
    t.mu[i] = {hp.prior_mean.lat + hp.prior_scale * normal(rng), hp.prior_mean.lon + hp.prior_scale * normal(rng)};
    do {
      t.sigma2[i] = variance(rng);
    } while (!(t.sigma2[i] > 0.0));
  }
  generate_documents(t, dims.docs, dims.tokens_per_doc, T, hp.alpha_value(), rng);

  SyntheticCorpus out;
  out.feature_names = synthetic_feature_names(F);
  out.records = render_records(t, dims.vocab, dims.feature_sizes, dims.regions, out.feature_names);
  out.truth = std::move(t);
  return out;
}

double scenario_latitude(const ScenarioConfig& config) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.areas))));
  double sum = 0.0;
  for (int i = 0; i < config.areas; ++i) sum += config.origin.lat + (i / cols) * config.spread_deg;
  return sum / config.areas;
}

SyntheticCorpus separated_scenario(const ScenarioConfig& cfg) {
  if (!(cfg.spread_deg > 4.0 * cfg.sigma_deg)) throw ValidationError("separated scenario needs spread > 4 sigma");
  if (cfg.areas < 1 || cfg.topics < 1 || cfg.docs < 0 || cfg.tokens_per_doc < 0) {
    throw ValidationError("scenario dimensions must be positive");
  }
  if (cfg.vocab < cfg.areas) throw ValidationError("scenario vocabulary must have at least one word per area");
  if (!(cfg.sigma_deg > 0.0)) throw ValidationError("scenario sigma must be positive");
  const int L = cfg.areas, T = cfg.topics, V = cfg.vocab;
  const int F = static_cast<int>(cfg.feature_sizes.size());
  const int block = V / L;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(L))));
  Rng rng(cfg.seed);

  GroundTruth t;
  t.psi = sample_dirichlet(cfg.area_concentration, L, rng);
  t.phi.resize(L);
  t.feature_dists.resize(L);
  t.region_dists.resize(L);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < T; ++j) {
      std::vector<double> phi(V, cfg.word_leak / V);
      const auto inner = sample_dirichlet(cfg.word_concentration, block, rng);
      for (int b = 0; b < block; ++b) phi[i * block + b] += (1.0 - cfg.word_leak) * inner[b];
      t.phi[i].push_back(std::move(phi));
    }
    for (int u = 0; u < F; ++u) {
      t.feature_dists[i].push_back(sample_dirichlet(cfg.feature_concentration, cfg.feature_sizes[u], rng));
    }
    t.region_dists[i].assign(L, cfg.region_smoothing / L);
    t.region_dists[i][i] += 1.0 - cfg.region_smoothing;
    t.mu.push_back({cfg.origin.lat + (i / cols) * cfg.spread_deg, cfg.origin.lon + (i % cols) * cfg.spread_deg});
    t.sigma2.push_back(cfg.sigma_deg * cfg.sigma_deg);
  }
  generate_documents(t, cfg.docs, cfg.tokens_per_doc, T, cfg.topic_concentration, rng);

  SyntheticCorpus out;
  out.feature_names = synthetic_feature_names(F);
  out.records = render_records(t, V, cfg.feature_sizes, L, out.feature_names);
  out.truth = std::move(t);
  return out;
}

json truth_to_json(const GroundTruth& t) {
  json mu = json::array();
  for (const auto& c : t.mu) mu.push_back({c.lat, c.lon});
  json coords = json::array();
  for (const auto& c : t.coords) coords.push_back({c.lat, c.lon});
  return {{"format", "rate-ground-truth"},
          {"version", 1},
          {"psi", t.psi},
          {"phi", t.phi},
          {"feature_dists", t.feature_dists},
          {"region_dists", t.region_dists},
          {"mu", mu},
          {"sigma2", t.sigma2},
          {"area", t.area},
          {"theta", t.theta},
          {"z", t.z},
          {"region", t.region},
          {"coords", coords}};
}

}  // namespace rate

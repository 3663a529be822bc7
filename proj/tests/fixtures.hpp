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

#include <vector>

#include "rate/corpus.hpp"
#include "rate/model.hpp"
#include "rate/synthetic.hpp"

namespace rate::fixtures {

/// Schema with V words, features of the given sizes (missing included) and
/// `regions` region labels, built directly rather than from records.
inline CorpusSchema schema(int vocab, std::vector<int> feature_sizes, int regions) {
  CorpusSchema s;
  s.min_count = 1;
  for (int r = 0; r < vocab; ++r) s.vocabulary.add("w" + std::to_string(r));
  for (std::size_t u = 0; u < feature_sizes.size(); ++u) {
    s.feature_names.push_back("f" + std::to_string(u));
    Dictionary d;
    d.add(kMissingCategory);
    for (int v = 1; v < feature_sizes[u]; ++v) d.add("c" + std::to_string(v));
    s.features.push_back(std::move(d));
  }
  for (int c = 0; c < regions; ++c) s.regions.add("r" + std::to_string(c));
  return s;
}

inline Document doc(std::vector<int> tokens, std::vector<int> features, int region, Coords c) {
  Document d;
  d.tokens = std::move(tokens);
  d.feature_values = std::move(features);
  d.region = region;
  d.coords = c;
  return d;
}

/// Three documents with at most two tokens over V = 3, one binary feature
/// and two regions.
inline std::vector<Document> tiny_docs() {
  return {doc({0, 1}, {1}, 0, {0.0, 0.0}), doc({1}, {0}, 1, {1.0, 0.5}), doc({2, 2}, {1}, 1, {0.2, 1.0})};
}

inline Hyperparams tiny_hyperparams(int areas, int topics) {
  Hyperparams hp;
  hp.areas = areas;
  hp.topics = topics;
  hp.alpha = 0.7;
  hp.beta = 0.3;
  hp.gamma = 0.9;
  hp.default_delta = 0.4;
  hp.samples = 1;
  hp.burn_in = 0;
  return hp;
}

inline AreaGaussians tiny_gaussians(int areas) {
  AreaGaussians g;
  for (int i = 0; i < areas; ++i) {
    g.mu.push_back({0.3 * i, 0.5 - 0.2 * i});
    g.sigma2.push_back(2.0 + i);
  }
  return g;
}

/// Indexed synthetic corpus from a scenario.
struct Indexed {
  SyntheticCorpus raw;
  CorpusSchema schema;
  std::vector<Document> docs;
};

inline Indexed indexed_scenario(const ScenarioConfig& cfg) {
  Indexed out;
  out.raw = separated_scenario(cfg);
  out.schema = build_schema(out.raw.records, 1, out.raw.feature_names);
  out.docs = index_corpus(out.raw.records, out.schema);
  return out;
}

}  // namespace rate::fixtures

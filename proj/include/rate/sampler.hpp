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
#include <vector>

#include "rate/model.hpp"

namespace rate {

/// What a single document contributes to the area conditional.
struct DocEvidence {
  struct TopicWord {
    int topic;
    int word;
    int count;
  };
  std::vector<TopicWord> pairs;    // distinct (z, w) pairs in the document
  std::vector<int> topic_totals;   // n_k^j for every topic
  int length = 0;                  // N_k
  std::vector<int> categories;     // one id per categorical feature included
  const Coords* coords = nullptr;  // null at test time

  static DocEvidence collect(const Document& doc, const std::vector<int>& z, int topics, bool include_region);
};

/// Unnormalized log weights over areas for a document whose contributions
/// are absent from `counts`. `gaussians` may be null (test time); when set,
/// evidence.coords must be non-null. Throws RuntimeError on sigma^2 <= 0.
std::vector<double> area_log_weights(const CountTensors& counts, const Priors& priors, ConditionalMode mode,
                                     const DocEvidence& evidence, const AreaGaussians* gaussians);

/// Collapsed Gibbs kernel over a training corpus. Holds no state of its own.
class GibbsSampler {
 public:
  GibbsSampler(const std::vector<Document>& corpus, Priors priors, ConditionalMode mode);

  void remove_token(SamplerState& s, int k, int l) const;
  void add_token(SamplerState& s, int k, int l, int topic) const;
  void remove_document(SamplerState& s, int k) const;
  void add_document(SamplerState& s, int k, int area) const;

  /// Topic weights for token (k, l); the token must already be removed.
  std::vector<double> z_log_weights(const SamplerState& s, int k, int l) const;
  /// Area weights for document k; the document must already be removed.
  std::vector<double> p_log_weights(const SamplerState& s, const AreaGaussians& g, int k) const;

  int sample_z(const SamplerState& s, int k, int l, Rng& rng) const;
  int sample_p(const SamplerState& s, const AreaGaussians& g, int k, Rng& rng) const;

  /// One pass in document order: p_k first, then each z_{k,l}. With T = 1
  /// the topic step is skipped entirely.
  void sweep(SamplerState& s, const AreaGaussians& g) const;

  const Priors& priors() const { return priors_; }
  ConditionalMode mode() const { return mode_; }

 private:
  const std::vector<Document>& corpus_;
  Priors priors_;
  ConditionalMode mode_;
};

struct Snapshot {
  std::vector<int> p;
  std::vector<std::vector<int>> z;
};

struct EStepOptions {
  int burn_in = 100;
  int samples = 10;
  int thin = 1;
  int audit_every = 0;  // 0 disables the per-sweep count audit
};

/// Burn-in sweeps, then `samples` snapshots taken every `thin` sweeps.
std::vector<Snapshot> e_step(SamplerState& state, const std::vector<Document>& corpus, const AreaGaussians& g,
                             const Priors& priors, ConditionalMode mode, const EStepOptions& options);

/// Collapsed log joint of Dirichlet-multinomial marginals (psi, theta, phi,
/// f, f~ integrated out) plus the Gaussian coordinate likelihood, up to an
/// additive constant independent of (z, p). Every document must carry a
/// region and coordinates.
double joint_log_prob(const std::vector<std::vector<int>>& z, const std::vector<int>& p,
                      const std::vector<Document>& corpus, const AreaGaussians& g, const Priors& priors);

/// Mean total-variation distance between the PaperLiteral and JointRatio
/// area conditionals over all documents at the current state. The state is
/// restored before returning.
double mode_disagreement(SamplerState& state, const std::vector<Document>& corpus, const AreaGaussians& g,
                         const Priors& priors);

/// Per-document test-time chain against frozen counts. Only the document's
/// own token assignments live here; the model is never modified.
class TestChain {
 public:
  TestChain(const TrainedModel& model, const Priors& priors, const Document& doc, std::uint64_t seed);

  /// Area weights with the document's own contributions removed: area
  /// prior, topic-word term and the F observed features.
  std::vector<double> p_log_weights() const;
  /// Topic weights for token l with that token removed.
  std::vector<double> z_log_weights(int l) const;

  int sample_p();
  void sweep();
  /// Runs the configured number of sweeps and returns the areas of the last
  /// S of them.
  std::vector<int> run();

  int area() const { return area_; }
  const std::vector<int>& topics() const { return z_; }

 private:
  const TrainedModel& model_;
  Priors priors_;
  const Document& doc_;
  std::vector<int> z_;
  std::vector<int> doc_topic_;
  int area_ = 0;
  Rng rng_;
};

}  // namespace rate

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

#include "rate/sampler.hpp"

#include <algorithm>
#include <numbers>

namespace rate {

DocEvidence DocEvidence::collect(const Document& doc, const std::vector<int>& z, int topics, bool include_region) {
  DocEvidence ev;
  ev.length = static_cast<int>(doc.tokens.size());
  ev.topic_totals.assign(topics, 0);

  std::vector<std::pair<int, int>> keyed;
  keyed.reserve(doc.tokens.size());
  for (std::size_t l = 0; l < doc.tokens.size(); ++l) {
    keyed.emplace_back(z[l], doc.tokens[l]);
    ++ev.topic_totals[z[l]];
  }
  std::sort(keyed.begin(), keyed.end());
  for (const auto& [topic, word] : keyed) {
    if (!ev.pairs.empty() && ev.pairs.back().topic == topic && ev.pairs.back().word == word) {
      ++ev.pairs.back().count;
    } else {
      ev.pairs.push_back({topic, word, 1});
    }
  }

  ev.categories = doc.feature_values;
  if (include_region) ev.categories.push_back(doc.region.value());
  if (doc.coords) ev.coords = &*doc.coords;
  return ev;
}

std::vector<double> area_log_weights(const CountTensors& counts, const Priors& priors, ConditionalMode mode,
                                     const DocEvidence& ev, const AreaGaussians* gaussians) {
  const double vbeta = priors.vocab * priors.beta;
  std::vector<double> weights(priors.areas, 0.0);
  for (int i = 0; i < priors.areas; ++i) {
    double w = 0.0;

    if (mode == ConditionalMode::JointRatio) {
      w += std::log(counts.area_doc_count[i] + priors.gamma);
    } else {
      const double base = counts.area_word_total[i] + priors.gamma;
      for (int l = 0; l < ev.length; ++l) w += std::log(base + l);
    }

    // Rising factorials of the Dirichlet-multinomial predictive, numerator
    // per (topic, word) pair and denominator once per topic.
    for (const auto& pair : ev.pairs) {
      const double base = counts.word(pair.topic, i, pair.word) + priors.beta;
      for (int l = 0; l < pair.count; ++l) w += std::log(base + l);
    }
    for (int j = 0; j < priors.topics; ++j) {
      const double base = counts.topic_total(j, i) + vbeta;
      for (int l = 0; l < ev.topic_totals[j]; ++l) w -= std::log(base + l);
    }

    const double area_docs = counts.area_doc_count[i];
    for (std::size_t u = 0; u < ev.categories.size(); ++u) {
      const double delta = priors.delta[u];
      w += std::log(counts.feature(static_cast<int>(u), i, ev.categories[u]) + delta) -
           std::log(area_docs + priors.categories[u] * delta);
    }

    if (gaussians != nullptr) {
      const double s2 = gaussians->sigma2[i];
      if (!(s2 > 0.0)) throw RuntimeError("sigma^2 of area " + std::to_string(i) + " is not positive");
      w += -std::log(s2) - squared_distance(*ev.coords, gaussians->mu[i]) / (2.0 * s2);
    }
    weights[i] = w;
  }
  return weights;
}

GibbsSampler::GibbsSampler(const std::vector<Document>& corpus, Priors priors, ConditionalMode mode)
    : corpus_(corpus), priors_(std::move(priors)), mode_(mode) {}

void GibbsSampler::remove_token(SamplerState& s, int k, int l) const {
  const int t = s.z[k][l];
  const int area = s.p[k];
  --s.doc_topic[k][t];
  --s.counts.word(t, area, corpus_[k].tokens[l]);
  --s.counts.topic_total(t, area);
}

void GibbsSampler::add_token(SamplerState& s, int k, int l, int topic) const {
  const int area = s.p[k];
  s.z[k][l] = topic;
  ++s.doc_topic[k][topic];
  ++s.counts.word(topic, area, corpus_[k].tokens[l]);
  ++s.counts.topic_total(topic, area);
}

void GibbsSampler::remove_document(SamplerState& s, int k) const {
  const Document& doc = corpus_[k];
  const int area = s.p[k];
  --s.counts.area_doc_count[area];
  s.counts.area_word_total[area] -= static_cast<int>(doc.tokens.size());
  for (std::size_t l = 0; l < doc.tokens.size(); ++l) {
    --s.counts.word(s.z[k][l], area, doc.tokens[l]);
    --s.counts.topic_total(s.z[k][l], area);
  }
  for (int u = 0; u <= priors_.num_features(); ++u) --s.counts.feature(u, area, observed_category(doc, u));
}

void GibbsSampler::add_document(SamplerState& s, int k, int area) const {
  const Document& doc = corpus_[k];
  s.p[k] = area;
  ++s.counts.area_doc_count[area];
  s.counts.area_word_total[area] += static_cast<int>(doc.tokens.size());
  for (std::size_t l = 0; l < doc.tokens.size(); ++l) {
    ++s.counts.word(s.z[k][l], area, doc.tokens[l]);
    ++s.counts.topic_total(s.z[k][l], area);
  }
  for (int u = 0; u <= priors_.num_features(); ++u) ++s.counts.feature(u, area, observed_category(doc, u));
}

std::vector<double> GibbsSampler::z_log_weights(const SamplerState& s, int k, int l) const {
  const int area = s.p[k];
  const int r = corpus_[k].tokens[l];
  const double vbeta = priors_.vocab * priors_.beta;
  std::vector<double> w(priors_.topics);
  for (int j = 0; j < priors_.topics; ++j) {
    w[j] = std::log(s.doc_topic[k][j] + priors_.alpha) + std::log(s.counts.word(j, area, r) + priors_.beta) -
           std::log(s.counts.topic_total(j, area) + vbeta);
  }
  return w;
}

std::vector<double> GibbsSampler::p_log_weights(const SamplerState& s, const AreaGaussians& g, int k) const {
  const DocEvidence ev = DocEvidence::collect(corpus_[k], s.z[k], priors_.topics, true);
  return area_log_weights(s.counts, priors_, mode_, ev, &g);
}

int GibbsSampler::sample_z(const SamplerState& s, int k, int l, Rng& rng) const {
  return sample_log_categorical(z_log_weights(s, k, l), rng);
}

int GibbsSampler::sample_p(const SamplerState& s, const AreaGaussians& g, int k, Rng& rng) const {
  return sample_log_categorical(p_log_weights(s, g, k), rng);
}

void GibbsSampler::sweep(SamplerState& s, const AreaGaussians& g) const {
  const int docs = static_cast<int>(corpus_.size());
  for (int k = 0; k < docs; ++k) {
    remove_document(s, k);
    add_document(s, k, sample_p(s, g, k, s.rng));

    if (priors_.topics == 1) continue;
    const int len = static_cast<int>(corpus_[k].tokens.size());
    for (int l = 0; l < len; ++l) {
      remove_token(s, k, l);
      add_token(s, k, l, sample_z(s, k, l, s.rng));
    }
  }
}

std::vector<Snapshot> e_step(SamplerState& state, const std::vector<Document>& corpus, const AreaGaussians& g,
                             const Priors& priors, ConditionalMode mode, const EStepOptions& options) {
  const GibbsSampler sampler(corpus, priors, mode);
  std::vector<Snapshot> snapshots;
  snapshots.reserve(options.samples);
  const int total = options.burn_in + options.samples * options.thin;
  for (int sweep = 1; sweep <= total; ++sweep) {
    sampler.sweep(state, g);
    if (options.audit_every > 0 && sweep % options.audit_every == 0) {
      const auto issues = audit_counts(state, corpus, priors);
      if (!issues.empty()) {
        throw RuntimeError("count audit failed after sweep " + std::to_string(sweep) + ": " + describe(issues.front()));
      }
    }
    if (sweep > options.burn_in && (sweep - options.burn_in) % options.thin == 0) {
      snapshots.push_back({state.p, state.z});
    }
  }
  return snapshots;
}

double joint_log_prob(const std::vector<std::vector<int>>& z, const std::vector<int>& p,
                      const std::vector<Document>& corpus, const AreaGaussians& g, const Priors& priors) {
  const CountTensors c = recount(corpus, z, p, priors);
  const int L = priors.areas, T = priors.topics, V = priors.vocab;
  const double D = static_cast<double>(corpus.size());
  double lp = 0.0;

  lp += std::lgamma(L * priors.gamma) - std::lgamma(D + L * priors.gamma);
  for (int i = 0; i < L; ++i) lp += std::lgamma(c.area_doc_count[i] + priors.gamma) - std::lgamma(priors.gamma);

  for (std::size_t k = 0; k < corpus.size(); ++k) {
    std::vector<int> n(T, 0);
    for (int t : z[k]) ++n[t];
    lp += std::lgamma(T * priors.alpha) - std::lgamma(z[k].size() + T * priors.alpha);
    for (int j = 0; j < T; ++j) lp += std::lgamma(n[j] + priors.alpha) - std::lgamma(priors.alpha);
  }

  for (int j = 0; j < T; ++j) {
    for (int i = 0; i < L; ++i) {
      lp += std::lgamma(V * priors.beta) - std::lgamma(c.topic_total(j, i) + V * priors.beta);
      for (int r = 0; r < V; ++r) {
        const int n = c.word(j, i, r);
        if (n > 0) lp += std::lgamma(n + priors.beta) - std::lgamma(priors.beta);
      }
    }
  }

  for (int u = 0; u <= priors.num_features(); ++u) {
    const int C = priors.categories[u];
    const double delta = priors.delta[u];
    for (int i = 0; i < L; ++i) {
      int total = 0;
      for (int v = 0; v < C; ++v) {
        const int m = c.feature(u, i, v);
        total += m;
        if (m > 0) lp += std::lgamma(m + delta) - std::lgamma(delta);
      }
      lp += std::lgamma(C * delta) - std::lgamma(total + C * delta);
    }
  }

  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const double s2 = g.sigma2[p[k]];
    lp += -std::log(2.0 * std::numbers::pi * s2) - squared_distance(*corpus[k].coords, g.mu[p[k]]) / (2.0 * s2);
  }
  return lp;
}

double mode_disagreement(SamplerState& state, const std::vector<Document>& corpus, const AreaGaussians& g,
                         const Priors& priors) {
  if (corpus.empty()) return 0.0;
  const GibbsSampler sampler(corpus, priors, ConditionalMode::JointRatio);
  double total = 0.0;
  for (int k = 0; k < static_cast<int>(corpus.size()); ++k) {
    const int area = state.p[k];
    sampler.remove_document(state, k);
    const DocEvidence ev = DocEvidence::collect(corpus[k], state.z[k], priors.topics, true);
    auto joint = area_log_weights(state.counts, priors, ConditionalMode::JointRatio, ev, &g);
    auto literal = area_log_weights(state.counts, priors, ConditionalMode::PaperLiteral, ev, &g);
    sampler.add_document(state, k, area);
    normalize_log_weights(joint);
    normalize_log_weights(literal);
    double tv = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) tv += std::abs(joint[i] - literal[i]);
    total += 0.5 * tv;
  }
  return total / static_cast<double>(corpus.size());
}

TestChain::TestChain(const TrainedModel& model, const Priors& priors, const Document& doc, std::uint64_t seed)
    : model_(model), priors_(priors), doc_(doc), rng_(seed) {
  if (priors_.areas > 1) area_ = std::uniform_int_distribution<int>(0, priors_.areas - 1)(rng_);
  z_.assign(doc_.tokens.size(), 0);
  if (priors_.topics > 1) {
    std::uniform_int_distribution<int> topic_dist(0, priors_.topics - 1);
    for (int& t : z_) t = topic_dist(rng_);
  }
  doc_topic_.assign(priors_.topics, 0);
  for (int t : z_) ++doc_topic_[t];
}

std::vector<double> TestChain::p_log_weights() const {
  const DocEvidence ev = DocEvidence::collect(doc_, z_, priors_.topics, false);
  return area_log_weights(model_.counts, priors_, model_.hyperparams.mode, ev, nullptr);
}

std::vector<double> TestChain::z_log_weights(int l) const {
  const int r = doc_.tokens[l];
  const CountTensors& frozen = model_.counts;
  const double vbeta = priors_.vocab * priors_.beta;
  std::vector<double> w(priors_.topics);
  for (int j = 0; j < priors_.topics; ++j) {
    const int own_topic = doc_topic_[j] - (z_[l] == j ? 1 : 0);
    int own_word = 0;
    for (std::size_t m = 0; m < z_.size(); ++m) {
      if (static_cast<int>(m) != l && z_[m] == j && doc_.tokens[m] == r) ++own_word;
    }
    w[j] = std::log(own_topic + priors_.alpha) + std::log(frozen.word(j, area_, r) + own_word + priors_.beta) -
           std::log(frozen.topic_total(j, area_) + own_topic + vbeta);
  }
  return w;
}

int TestChain::sample_p() {
  area_ = sample_log_categorical(p_log_weights(), rng_);
  return area_;
}

void TestChain::sweep() {
  sample_p();
  if (priors_.topics == 1) return;
  for (int l = 0; l < static_cast<int>(z_.size()); ++l) {
    const int t = sample_log_categorical(z_log_weights(l), rng_);
    --doc_topic_[z_[l]];
    z_[l] = t;
    ++doc_topic_[t];
  }
}

std::vector<int> TestChain::run() {
  const int sweeps = model_.hyperparams.test_sweeps;
  const int keep = model_.hyperparams.samples;
  std::vector<int> areas;
  areas.reserve(keep);
  for (int s = 0; s < sweeps; ++s) {
    sweep();
    if (s >= sweeps - keep) areas.push_back(area_);
  }
  return areas;
}

}  // namespace rate

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

#include "rate/em.hpp"

#include <algorithm>
#include <ostream>

#include "rate/predict.hpp"

namespace rate {

using nlohmann::json;

MuUpdate m_step_mu(const std::vector<Snapshot>& snapshots, const std::vector<Document>& corpus,
                   const std::vector<Coords>& previous) {
  const std::size_t areas = previous.size();
  std::vector<double> lat(areas, 0.0), lon(areas, 0.0);
  MuUpdate out;
  out.members.assign(areas, 0);
  for (const auto& snap : snapshots) {
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      const int p = snap.p[k];
      lat[p] += corpus[k].coords->lat;
      lon[p] += corpus[k].coords->lon;
      ++out.members[p];
    }
  }
  out.mu = previous;
  for (std::size_t i = 0; i < areas; ++i) {
    if (out.members[i] > 0) out.mu[i] = {lat[i] / out.members[i], lon[i] / out.members[i]};
  }
  return out;
}

double sigma2_root(double mean_sq_over_three, double lambda) {
  if (lambda == 0.0) return mean_sq_over_three;
  // (-1 + sqrt(1 + 4 lambda A)) / (2 lambda), rewritten without cancellation.
  return 2.0 * mean_sq_over_three / (1.0 + std::sqrt(1.0 + 4.0 * lambda * mean_sq_over_three));
}

std::vector<double> m_step_sigma(const std::vector<Snapshot>& snapshots, const std::vector<Document>& corpus,
                                 const std::vector<Coords>& mu, double lambda, double floor) {
  const std::size_t areas = mu.size();
  std::vector<double> sq(areas, 0.0);
  std::vector<long long> members(areas, 0);
  for (const auto& snap : snapshots) {
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      const int p = snap.p[k];
      sq[p] += squared_distance(*corpus[k].coords, mu[p]);
      ++members[p];
    }
  }
  std::vector<double> sigma2(areas, floor);
  for (std::size_t i = 0; i < areas; ++i) {
    if (members[i] == 0) continue;
    const double a = sq[i] / (3.0 * static_cast<double>(members[i]));
    if (a > 0.0) sigma2[i] = sigma2_root(a, lambda);
  }
  return sigma2;
}

json report_to_json(const TrainReport& report) {
  return {{"mode", to_string(report.mode)},
          {"log_joint", report.log_joint},
          {"mu_shift_km", report.mu_shift_km},
          {"sigma2", report.sigma2},
          {"empty_areas", report.empty_areas},
          {"final_occupancy", report.final_occupancy},
          {"mode_disagreement_tv", report.mode_disagreement_tv}};
}

void write_trace_csv(std::ostream& out, const TrainReport& report) {
  const auto old_precision = out.precision(17);
  out << "iteration,log_joint,mu_shift_km\n";
  for (std::size_t i = 0; i < report.log_joint.size(); ++i) {
    out << i + 1 << ',' << report.log_joint[i] << ',' << report.mu_shift_km[i] << '\n';
  }
  out.precision(old_precision);
}

namespace {

AreaGaussians initial_gaussians(const std::vector<Document>& corpus, const Hyperparams& hp) {
  std::vector<Coords> coords;
  coords.reserve(corpus.size());
  for (const auto& d : corpus) coords.push_back(*d.coords);
  const KMeansResult km = kmeans_regions(coords, hp.areas, derive_seed(hp.seed, 1));

  AreaGaussians g;
  g.mu = km.centers;
  std::vector<double> sq(hp.areas, 0.0);
  std::vector<int> n(hp.areas, 0);
  for (std::size_t k = 0; k < coords.size(); ++k) {
    sq[km.labels[k]] += squared_distance(coords[k], km.centers[km.labels[k]]);
    ++n[km.labels[k]];
  }
  g.sigma2.resize(hp.areas);
  for (int i = 0; i < hp.areas; ++i) {
    g.sigma2[i] = n[i] > 0 ? std::max(sq[i] / (3.0 * n[i]), hp.sigma2_floor) : hp.sigma2_floor;
  }
  return g;
}

// Moves each empty area onto the document farthest from its own center in
// the last snapshot.
void reseed_empty(AreaGaussians& g, const std::vector<int>& members, const Snapshot& last,
                  const std::vector<Document>& corpus, double floor) {
  std::vector<bool> taken(corpus.size(), false);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] > 0) continue;
    double worst = -1.0;
    std::size_t pick = 0;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      if (taken[k]) continue;
      const double d = squared_distance(*corpus[k].coords, g.mu[last.p[k]]);
      if (d > worst) {
        worst = d;
        pick = k;
      }
    }
    if (worst < 0.0) return;
    taken[pick] = true;
    g.mu[i] = *corpus[pick].coords;
    g.sigma2[i] = floor;
  }
}

}  // namespace

TrainResult train(const std::vector<Document>& corpus, const CorpusSchema& schema, const Hyperparams& hp,
                  const TrainOptions& options) {
  const Priors priors = Priors::resolve(hp, schema);
  SamplerState state = init_state(corpus, priors, hp.seed);
  AreaGaussians g = initial_gaussians(corpus, hp);

  TrainResult result;
  TrainReport& report = result.report;
  report.mode = hp.mode;
  const EStepOptions estep{hp.burn_in, hp.samples, hp.thin, options.audit_every};

  for (int iter = 0; iter < hp.em_iterations; ++iter) {
    const auto snapshots = e_step(state, corpus, g, priors, hp.mode, estep);

    MuUpdate mu = m_step_mu(snapshots, corpus, g.mu);
    AreaGaussians next{mu.mu, m_step_sigma(snapshots, corpus, mu.mu, hp.lambda, hp.sigma2_floor)};
    std::vector<int> empty;
    for (int i = 0; i < hp.areas; ++i) {
      if (mu.members[i] == 0) empty.push_back(i);
    }
    if (hp.reseed_empty_areas && !empty.empty()) reseed_empty(next, mu.members, snapshots.back(), corpus, hp.sigma2_floor);

    double shift = 0.0;
    for (int i = 0; i < hp.areas; ++i) shift = std::max(shift, haversine_km(g.mu[i], next.mu[i]));
    g = std::move(next);

    const double lj = joint_log_prob(state.z, state.p, corpus, g, priors);
    if (!std::isfinite(lj)) {
      throw RuntimeError("non-finite log joint after EM iteration " + std::to_string(iter + 1));
    }
    report.log_joint.push_back(lj);
    report.mu_shift_km.push_back(shift);
    report.sigma2.push_back(g.sigma2);
    report.empty_areas.push_back(std::move(empty));
  }

  report.final_occupancy = state.counts.area_doc_count;
  report.mode_disagreement_tv = mode_disagreement(state, corpus, g, priors);

  TrainedModel& model = result.model;
  model.hyperparams = hp;
  model.hyperparams.alpha = hp.alpha_value();
  model.schema = schema;
  model.counts = std::move(state.counts);
  model.gaussians = std::move(g);
  model.region_posterior = region_posterior(model.counts, priors);
  model.region_centers = options.region_centers;
  return result;
}

}  // namespace rate

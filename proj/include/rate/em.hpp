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

#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "rate/model.hpp"
#include "rate/sampler.hpp"

namespace rate {

struct MuUpdate {
  std::vector<Coords> mu;
  std::vector<int> members;  // pooled member count M_p over all snapshots
};

/// Pooled mean of member coordinates over every snapshot. Areas without
/// members keep `previous`.
MuUpdate m_step_mu(const std::vector<Snapshot>& snapshots, const std::vector<Document>& corpus,
                   const std::vector<Coords>& previous);

/// Positive root of lambda s^2 + s - A = 0 with s = sigma^2, A >= 0.
double sigma2_root(double mean_sq_over_three, double lambda);

/// Per-area sigma^2 solving the M-step biquadratic at the given centers.
/// Areas with no members or zero spread get `floor`.
std::vector<double> m_step_sigma(const std::vector<Snapshot>& snapshots, const std::vector<Document>& corpus,
                                 const std::vector<Coords>& mu, double lambda, double floor);

struct TrainReport {
  std::vector<double> log_joint;                  // one per EM iteration
  std::vector<double> mu_shift_km;                // max center movement per iteration
  std::vector<std::vector<double>> sigma2;        // per iteration
  std::vector<std::vector<int>> empty_areas;      // per iteration
  std::vector<int> final_occupancy;               // documents per area, last snapshot
  double mode_disagreement_tv = 0.0;
  ConditionalMode mode = ConditionalMode::JointRatio;
};

nlohmann::json report_to_json(const TrainReport& report);
void write_trace_csv(std::ostream& out, const TrainReport& report);

struct TrainResult {
  TrainedModel model;
  TrainReport report;
};

struct TrainOptions {
  int audit_every = 0;
  std::vector<Coords> region_centers;  // copied into the model
};

/// Gibbs-EM: K-means initial centers, then alternating E-step and M-step.
/// Counts from the last snapshot of the final E-step are frozen into the model.
TrainResult train(const std::vector<Document>& corpus, const CorpusSchema& schema, const Hyperparams& hp,
                  const TrainOptions& options = {});

}  // namespace rate

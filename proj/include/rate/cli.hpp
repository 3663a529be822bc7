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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rate/corpus.hpp"
#include "rate/model.hpp"
#include "rate/synthetic.hpp"

namespace rate {

/// Everything a subcommand needs. Defaults reproduce the reference setup:
/// alpha = 50/(L T), other priors 0.01, L = 30, T = 1, K = 4.
struct RunConfig {
  std::string command;

  std::string input;
  std::string output;
  std::string model;
  std::string predictions;
  std::string report;
  std::string trace;
  std::string schema;
  std::string truth;
  std::string stopwords;

  Hyperparams hp;
  std::optional<double> region_delta;
  int min_count = 10;
  std::vector<std::string> features = default_feature_names();
  bool features_given = false;
  unsigned threads = 0;  // 0 means all available cores

  bool kmeans_regions = false;
  int k = 4;

  int top_n = 8;
  int top_areas = 0;  // 0 lists every area

  bool scenario = false;
  SyntheticDims dims;
  ScenarioConfig scenario_config;

  int audit_every = 0;
};

/// Parses argv (flags > --config JSON file > defaults) and dispatches.
/// Returns 0 on success, 1 on validation errors, 2 on runtime errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_predict(const RunConfig& config, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);
int cmd_generate(const RunConfig& config, std::ostream& out);
int cmd_topwords(const RunConfig& config, std::ostream& out);

struct AreaWords {
  int area = 0;
  Coords center;
  int documents = 0;
  std::vector<std::pair<std::string, double>> words;
};

/// Areas by descending document count (lowest id on ties), each with its
/// top-n words under the posterior word distribution pooled over topics.
std::vector<AreaWords> top_words(const TrainedModel& model, int top_n, int top_areas,
                                 const std::vector<std::string>& stopwords = {});

}  // namespace rate

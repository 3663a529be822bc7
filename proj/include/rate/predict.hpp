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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rate/model.hpp"

namespace rate {

inline constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(const Coords& a, const Coords& b);

struct Prediction {
  std::size_t doc = 0;
  std::vector<int> areas;  // p^(1..S)
  Coords coords;
  int region = 0;
  std::vector<double> region_scores;
};

/// sum_s mu_{p_s} / sigma^2_{p_s}  /  sum_s 1 / sigma^2_{p_s}
Coords precision_weighted_center(const AreaGaussians& g, std::span<const int> areas);

/// scores[C] = sum_s log f~[p_s][C]. Returns the argmax, lowest id on ties.
int best_region(const std::vector<std::vector<double>>& region_posterior, std::span<const int> areas,
                std::vector<double>* scores = nullptr);

/// Runs a test chain and collects S area samples.
std::vector<int> sample_test_areas(const TrainedModel& model, const Document& doc, std::uint64_t seed);

Coords predict_coordinates(const TrainedModel& model, const Document& doc, std::uint64_t seed);
int predict_region(const TrainedModel& model, const Document& doc, std::uint64_t seed,
                   std::vector<double>* scores = nullptr);

/// One chain feeds both the coordinate and the region estimate.
Prediction predict(const TrainedModel& model, const Document& doc, std::uint64_t seed);

/// Document k uses the stream derive_seed(seed, k), so the output does not
/// depend on `threads`.
std::vector<Prediction> predict_corpus(const TrainedModel& model, const std::vector<Document>& docs,
                                       std::uint64_t seed, unsigned threads = 1);

/// Predicted or ground-truth labels in string form so external prediction
/// files can be scored the same way.
struct LabeledPoint {
  std::optional<std::string> region;
  std::optional<Coords> coords;
};

struct EvaluationReport {
  double precision = 0.0;
  double mde_km = 0.0;
  std::size_t n_docs = 0;
  std::size_t n_region = 0;  // documents scored for precision
  std::size_t n_coords = 0;  // documents scored for MDE
  std::map<std::string, std::map<std::string, int>> confusion;  // truth -> predicted -> count
};

/// Precision over documents with a true region, MDE over documents with
/// true coordinates. Throws ValidationError on an empty or mismatched input.
EvaluationReport evaluate(const std::vector<LabeledPoint>& predicted, const std::vector<LabeledPoint>& truth);

/// Predicts every document and scores it. Ground truth comes from `truth`;
/// the documents themselves are not required to carry labels.
EvaluationReport evaluate(const TrainedModel& model, const std::vector<Document>& docs,
                          const std::vector<LabeledPoint>& truth, std::uint64_t seed, unsigned threads = 1);

nlohmann::json evaluation_to_json(const EvaluationReport& report);

/// doc_id,region,lat,lon
void write_predictions_csv(std::ostream& out, const std::vector<LabeledPoint>& predictions);
std::vector<LabeledPoint> read_predictions_csv(std::istream& in);

std::vector<LabeledPoint> to_labeled(const TrainedModel& model, const std::vector<Prediction>& predictions);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<Coords> centers;
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm on planar (lat, lon) with k-means++ seeding. At most 100
/// iterations; stops early when no assignment changes.
KMeansResult kmeans_regions(const std::vector<Coords>& coords, int k, std::uint64_t seed);

/// Index of the nearest center, lowest index on ties.
int nearest_center(const std::vector<Coords>& centers, const Coords& c);

/// Multinomial naive Bayes over the categorical features with add-one
/// smoothing on the class prior and on every feature likelihood.
class NaiveBayes {
 public:
  void train(const std::vector<Document>& docs, const CorpusSchema& schema);
  int predict(const Document& doc) const;
  std::vector<double> log_posterior(const Document& doc) const;

 private:
  int regions_ = 0;
  std::vector<int> categories_;
  std::vector<long long> region_docs_;
  long long total_docs_ = 0;
  std::vector<std::vector<long long>> counts_;  // [u][c * C_u + v]
};

}  // namespace rate

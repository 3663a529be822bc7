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

#include "rate/predict.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "rate/sampler.hpp"

namespace rate {

using nlohmann::json;

double haversine_km(const Coords& a, const Coords& b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  double h = s1 * s1 + std::cos(a.lat * rad) * std::cos(b.lat * rad) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

Coords precision_weighted_center(const AreaGaussians& g, std::span<const int> areas) {
  double lat = 0.0, lon = 0.0, weight = 0.0;
  for (int p : areas) {
    const double w = 1.0 / g.sigma2[p];
    lat += g.mu[p].lat * w;
    lon += g.mu[p].lon * w;
    weight += w;
  }
  return {lat / weight, lon / weight};
}

int best_region(const std::vector<std::vector<double>>& region_posterior, std::span<const int> areas,
                std::vector<double>* scores) {
  const std::size_t regions = region_posterior.empty() ? 0 : region_posterior.front().size();
  std::vector<double> s(regions, 0.0);
  for (int p : areas) {
    for (std::size_t c = 0; c < regions; ++c) s[c] += std::log(region_posterior[p][c]);
  }
  int best = 0;
  for (std::size_t c = 1; c < regions; ++c) {
    if (s[c] > s[best]) best = static_cast<int>(c);
  }
  if (scores != nullptr) *scores = std::move(s);
  return best;
}

std::vector<int> sample_test_areas(const TrainedModel& model, const Document& doc, std::uint64_t seed) {
  const Priors priors = model.priors();
  TestChain chain(model, priors, doc, seed);
  return chain.run();
}

Coords predict_coordinates(const TrainedModel& model, const Document& doc, std::uint64_t seed) {
  return precision_weighted_center(model.gaussians, sample_test_areas(model, doc, seed));
}

int predict_region(const TrainedModel& model, const Document& doc, std::uint64_t seed, std::vector<double>* scores) {
  return best_region(model.region_posterior, sample_test_areas(model, doc, seed), scores);
}

Prediction predict(const TrainedModel& model, const Document& doc, std::uint64_t seed) {
  Prediction out;
  out.areas = sample_test_areas(model, doc, seed);
  out.coords = precision_weighted_center(model.gaussians, out.areas);
  out.region = best_region(model.region_posterior, out.areas, &out.region_scores);
  return out;
}

std::vector<Prediction> predict_corpus(const TrainedModel& model, const std::vector<Document>& docs,
                                       std::uint64_t seed, unsigned threads) {
  std::vector<Prediction> out(docs.size());
  const Priors priors = model.priors();
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < docs.size(); k += stride) {
      TestChain chain(model, priors, docs[k], derive_seed(seed, k));
      Prediction& pred = out[k];
      pred.doc = k;
      pred.areas = chain.run();
      pred.coords = precision_weighted_center(model.gaussians, pred.areas);
      pred.region = best_region(model.region_posterior, pred.areas, &pred.region_scores);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || docs.size() < 2) {
    work(0, 1);
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  return out;
}

EvaluationReport evaluate(const std::vector<LabeledPoint>& predicted, const std::vector<LabeledPoint>& truth) {
  if (truth.empty()) throw ValidationError("empty test set");
  if (predicted.size() != truth.size()) {
    throw ValidationError("prediction count " + std::to_string(predicted.size()) + " does not match label count " +
                          std::to_string(truth.size()));
  }
  EvaluationReport report;
  report.n_docs = truth.size();
  std::size_t correct = 0;
  double distance = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k].region) {
      ++report.n_region;
      const std::string guess = predicted[k].region.value_or("");
      if (guess == *truth[k].region) ++correct;
      ++report.confusion[*truth[k].region][guess];
    }
    if (truth[k].coords) {
      if (!predicted[k].coords) throw ValidationError("document " + std::to_string(k) + " has no predicted coordinates");
      ++report.n_coords;
      distance += haversine_km(*predicted[k].coords, *truth[k].coords);
    }
  }
  if (report.n_region == 0 && report.n_coords == 0) throw ValidationError("test set carries no labels");
  report.precision = report.n_region ? static_cast<double>(correct) / static_cast<double>(report.n_region) : 0.0;
  report.mde_km = report.n_coords ? distance / static_cast<double>(report.n_coords) : 0.0;
  return report;
}

EvaluationReport evaluate(const TrainedModel& model, const std::vector<Document>& docs,
                          const std::vector<LabeledPoint>& truth, std::uint64_t seed, unsigned threads) {
  if (docs.empty()) throw ValidationError("empty test set");
  return evaluate(to_labeled(model, predict_corpus(model, docs, seed, threads)), truth);
}

json evaluation_to_json(const EvaluationReport& report) {
  json confusion = json::object();
  for (const auto& [truth, row] : report.confusion) {
    for (const auto& [guess, n] : row) confusion[truth][guess] = n;
  }
  return {{"precision", report.precision},
          {"mde_km", report.mde_km},
          {"n_docs", report.n_docs},
          {"n_region", report.n_region},
          {"n_coords", report.n_coords},
          {"per_region_confusion", confusion}};
}

std::vector<LabeledPoint> to_labeled(const TrainedModel& model, const std::vector<Prediction>& predictions) {
  std::vector<LabeledPoint> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    LabeledPoint lp;
    if (model.schema.regions.size() > 0) lp.region = model.schema.regions.at(p.region);
    lp.coords = p.coords;
    out.push_back(std::move(lp));
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

void write_predictions_csv(std::ostream& out, const std::vector<LabeledPoint>& predictions) {
  out << "doc_id,region,lat,lon\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto& p = predictions[k];
    out << k << ',' << csv_field(p.region.value_or("")) << ',';
    if (p.coords) out << p.coords->lat << ',' << p.coords->lon;
    else out << ',';
    out << '\n';
  }
  out.precision(old_precision);
}

std::vector<LabeledPoint> read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (split_csv_line(line) != std::vector<std::string>{"doc_id", "region", "lat", "lon"}) {
    throw ValidationError("prediction file header must be doc_id,region,lat,lon");
  }
  std::vector<std::pair<long long, LabeledPoint>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw ValidationError("prediction file line " + std::to_string(line_no) + ": expected 4 fields");
    try {
      LabeledPoint lp;
      if (!f[1].empty()) lp.region = f[1];
      if (!f[2].empty() || !f[3].empty()) lp.coords = Coords{std::stod(f[2]), std::stod(f[3])};
      rows.emplace_back(std::stoll(f[0]), std::move(lp));
    } catch (const std::logic_error&) {
      throw ValidationError("prediction file line " + std::to_string(line_no) + ": malformed number");
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<LabeledPoint> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<long long>(i)) {
      throw ValidationError("prediction file doc_ids must be 0..n-1 without gaps or duplicates");
    }
    out.push_back(std::move(rows[i].second));
  }
  return out;
}

int nearest_center(const std::vector<Coords>& centers, const Coords& c) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = squared_distance(centers[i], c);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

KMeansResult kmeans_regions(const std::vector<Coords>& coords, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("k-means needs k >= 1");
  {
    std::vector<std::pair<double, double>> distinct;
    distinct.reserve(coords.size());
    for (const auto& c : coords) distinct.emplace_back(c.lat, c.lon);
    std::sort(distinct.begin(), distinct.end());
    const auto n = std::unique(distinct.begin(), distinct.end()) - distinct.begin();
    if (n < k) {
      throw ValidationError("k-means needs at least " + std::to_string(k) + " distinct points, got " + std::to_string(n));
    }
  }

  Rng rng(seed);
  const std::size_t n = coords.size();
  KMeansResult res;
  res.centers.push_back(coords[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(coords[i], res.centers[0]);
  while (static_cast<int>(res.centers.size()) < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      acc += nearest[i];
      pick = i;
      if (u < acc) break;
    }
    res.centers.push_back(coords[pick]);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_distance(coords[i], res.centers.back()));
  }

  res.labels.assign(n, -1);
  for (res.iterations = 1; res.iterations <= 100; ++res.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest_center(res.centers, coords[i]);
      if (c != res.labels[i]) {
        res.labels[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Coords> sums(k, Coords{0.0, 0.0});
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[res.labels[i]].lat += coords[i].lat;
      sums[res.labels[i]].lon += coords[i].lon;
      ++sizes[res.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;  // keep the previous center
      res.centers[c] = {sums[c].lat / static_cast<double>(sizes[c]), sums[c].lon / static_cast<double>(sizes[c])};
    }
  }
  res.iterations = std::min(res.iterations, 100);
  for (std::size_t i = 0; i < n; ++i) res.inertia += squared_distance(coords[i], res.centers[res.labels[i]]);
  return res;
}

void NaiveBayes::train(const std::vector<Document>& docs, const CorpusSchema& schema) {
  regions_ = schema.regions.size();
  categories_.clear();
  for (const auto& f : schema.features) categories_.push_back(f.size());
  region_docs_.assign(regions_, 0);
  counts_.clear();
  for (int c : categories_) counts_.emplace_back(static_cast<std::size_t>(regions_) * c, 0);
  total_docs_ = 0;
  for (std::size_t k = 0; k < docs.size(); ++k) {
    const Document& doc = docs[k];
    if (!doc.region) throw ValidationError("naive Bayes training document " + std::to_string(k) + " has no region");
    const int c = *doc.region;
    ++region_docs_[c];
    ++total_docs_;
    for (std::size_t u = 0; u < categories_.size(); ++u) {
      ++counts_[u][static_cast<std::size_t>(c) * categories_[u] + doc.feature_values[u]];
    }
  }
}

std::vector<double> NaiveBayes::log_posterior(const Document& doc) const {
  std::vector<double> score(regions_);
  for (int c = 0; c < regions_; ++c) {
    double s = std::log((region_docs_[c] + 1.0) / static_cast<double>(total_docs_ + regions_));
    for (std::size_t u = 0; u < categories_.size(); ++u) {
      const long long n = counts_[u][static_cast<std::size_t>(c) * categories_[u] + doc.feature_values[u]];
      s += std::log((n + 1.0) / static_cast<double>(region_docs_[c] + categories_[u]));
    }
    score[c] = s;
  }
  auto probs = score;
  const double norm = normalize_log_weights(probs);
  for (double& s : score) s -= norm;
  return score;
}

int NaiveBayes::predict(const Document& doc) const {
  const auto score = log_posterior(doc);
  int best = 0;
  for (int c = 1; c < regions_; ++c) {
    if (score[c] > score[best]) best = c;
  }
  return best;
}

}  // namespace rate

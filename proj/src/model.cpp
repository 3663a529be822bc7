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

#include "rate/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rate {

using nlohmann::json;

std::string to_string(ConditionalMode mode) {
  return mode == ConditionalMode::PaperLiteral ? "paper-literal" : "joint-ratio";
}

ConditionalMode conditional_mode_from_string(const std::string& s) {
  if (s == "paper-literal") return ConditionalMode::PaperLiteral;
  if (s == "joint-ratio") return ConditionalMode::JointRatio;
  throw ValidationError("unknown conditional mode '" + s + "' (expected paper-literal or joint-ratio)");
}

void Hyperparams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("invalid hyperparameter: ") + what);
  };
  require(areas >= 1, "areas >= 1");
  require(topics >= 1, "topics >= 1");
  require(alpha_value() > 0.0, "alpha > 0");
  require(beta > 0.0, "beta > 0");
  require(gamma > 0.0, "gamma > 0");
  require(default_delta > 0.0, "delta > 0");
  for (double d : delta) require(d > 0.0, "delta > 0");
  require(lambda >= 0.0, "lambda >= 0");
  require(prior_scale > 0.0, "b > 0");
  require(gamma_shape > 0.0 && gamma_rate > 0.0, "c, d > 0");
  require(samples >= 1, "samples >= 1");
  require(burn_in >= 0, "burn_in >= 0");
  require(thin >= 1, "thin >= 1");
  require(em_iterations >= 1, "em_iterations >= 1");
  require(test_sweeps >= samples, "test_sweeps >= samples");
  require(sigma2_floor > 0.0, "sigma2_floor > 0");
}

Priors Priors::resolve(const Hyperparams& hp, const CorpusSchema& schema) {
  hp.validate();
  Priors pr;
  pr.areas = hp.areas;
  pr.topics = hp.topics;
  pr.vocab = schema.vocabulary.size();
  pr.categories = schema.category_sizes();
  pr.alpha = hp.alpha_value();
  pr.beta = hp.beta;
  pr.gamma = hp.gamma;
  if (hp.delta.empty()) {
    pr.delta.assign(pr.categories.size(), hp.default_delta);
  } else if (hp.delta.size() == pr.categories.size()) {
    pr.delta = hp.delta;
  } else {
    throw ValidationError("delta has " + std::to_string(hp.delta.size()) + " entries, schema needs " +
                          std::to_string(pr.categories.size()));
  }
  return pr;
}

CountTensors::CountTensors(int areas_, int topics_, int vocab_, std::vector<int> categories_)
    : areas(areas_), topics(topics_), vocab(vocab_), categories(std::move(categories_)) {
  topic_area_word.assign(static_cast<std::size_t>(topics) * areas * vocab, 0);
  topic_area_total.assign(static_cast<std::size_t>(topics) * areas, 0);
  area_word_total.assign(areas, 0);
  area_doc_count.assign(areas, 0);
  for (int c : categories) area_feature_cat.emplace_back(static_cast<std::size_t>(areas) * c, 0);
}

namespace {

void require_training_docs(const std::vector<Document>& corpus, const Priors& priors) {
  if (corpus.empty()) throw ValidationError("corpus has no documents");
  const int features = priors.num_features();
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const Document& doc = corpus[k];
    if (!doc.region || !doc.coords) {
      throw ValidationError("training document " + std::to_string(k) + " lacks a region or coordinates");
    }
    if (static_cast<int>(doc.feature_values.size()) != features) {
      throw ValidationError("document " + std::to_string(k) + " has the wrong number of features");
    }
  }
}

}  // namespace

CountTensors recount(const std::vector<Document>& corpus, const std::vector<std::vector<int>>& z,
                     const std::vector<int>& p, const Priors& priors) {
  CountTensors c(priors.areas, priors.topics, priors.vocab, priors.categories);
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const Document& doc = corpus[k];
    const int area = p[k];
    ++c.area_doc_count[area];
    c.area_word_total[area] += static_cast<int>(doc.tokens.size());
    for (std::size_t l = 0; l < doc.tokens.size(); ++l) {
      ++c.word(z[k][l], area, doc.tokens[l]);
      ++c.topic_total(z[k][l], area);
    }
    for (int u = 0; u <= priors.num_features(); ++u) ++c.feature(u, area, observed_category(doc, u));
  }
  return c;
}

SamplerState init_state(const std::vector<Document>& corpus, const Priors& priors, std::uint64_t seed) {
  require_training_docs(corpus, priors);
  SamplerState s;
  s.rng.seed(seed);
  std::uniform_int_distribution<int> area_dist(0, priors.areas - 1);
  std::uniform_int_distribution<int> topic_dist(0, priors.topics - 1);
  s.p.resize(corpus.size());
  s.z.resize(corpus.size());
  s.doc_topic.assign(corpus.size(), std::vector<int>(priors.topics, 0));
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    s.p[k] = priors.areas == 1 ? 0 : area_dist(s.rng);
    s.z[k].assign(corpus[k].tokens.size(), 0);
    if (priors.topics > 1) {
      for (int& t : s.z[k]) t = topic_dist(s.rng);
    }
    for (int t : s.z[k]) ++s.doc_topic[k][t];
  }
  s.counts = recount(corpus, s.z, s.p, priors);
  return s;
}

namespace {

void compare(const std::string& name, const std::vector<int>& expected, const std::vector<int>& actual,
             const std::vector<int>& shape, std::vector<Discrepancy>& out) {
  if (expected.size() != actual.size()) {
    out.push_back({name + ".size", {}, static_cast<long long>(expected.size()), static_cast<long long>(actual.size())});
    return;
  }
  for (std::size_t flat = 0; flat < expected.size(); ++flat) {
    if (expected[flat] == actual[flat]) continue;
    std::vector<int> index(shape.size());
    std::size_t rest = flat;
    for (std::size_t d = shape.size(); d-- > 0;) {
      index[d] = static_cast<int>(rest % shape[d]);
      rest /= shape[d];
    }
    out.push_back({name, std::move(index), expected[flat], actual[flat]});
  }
}

}  // namespace

std::vector<Discrepancy> audit_counts(const SamplerState& state, const std::vector<Document>& corpus,
                                      const Priors& priors) {
  std::vector<Discrepancy> out;
  if (state.p.size() != corpus.size() || state.z.size() != corpus.size() || state.doc_topic.size() != corpus.size()) {
    out.push_back({"assignments.size", {}, static_cast<long long>(corpus.size()), static_cast<long long>(state.p.size())});
    return out;
  }
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const int kk = static_cast<int>(k);
    if (state.p[k] < 0 || state.p[k] >= priors.areas) out.push_back({"p.range", {kk}, 0, state.p[k]});
    if (state.z[k].size() != corpus[k].tokens.size()) {
      out.push_back({"z.size", {kk}, static_cast<long long>(corpus[k].tokens.size()),
                     static_cast<long long>(state.z[k].size())});
      continue;
    }
    for (std::size_t l = 0; l < state.z[k].size(); ++l) {
      if (state.z[k][l] < 0 || state.z[k][l] >= priors.topics) {
        out.push_back({"z.range", {kk, static_cast<int>(l)}, 0, state.z[k][l]});
      }
    }
  }
  if (!out.empty()) return out;

  for (std::size_t k = 0; k < corpus.size(); ++k) {
    std::vector<int> expected(priors.topics, 0);
    for (int t : state.z[k]) ++expected[t];
    std::vector<Discrepancy> local;
    compare("doc_topic", expected, state.doc_topic[k], {priors.topics}, local);
    for (auto& d : local) {
      d.index.insert(d.index.begin(), static_cast<int>(k));
      out.push_back(std::move(d));
    }
  }

  const CountTensors expected = recount(corpus, state.z, state.p, priors);
  const CountTensors& actual = state.counts;
  const int L = priors.areas, T = priors.topics, V = priors.vocab;
  compare("topic_area_word", expected.topic_area_word, actual.topic_area_word, {T, L, V}, out);
  compare("topic_area_total", expected.topic_area_total, actual.topic_area_total, {T, L}, out);
  compare("area_word_total", expected.area_word_total, actual.area_word_total, {L}, out);
  compare("area_doc_count", expected.area_doc_count, actual.area_doc_count, {L}, out);
  if (actual.area_feature_cat.size() != expected.area_feature_cat.size()) {
    out.push_back({"area_feature_cat.size", {}, static_cast<long long>(expected.area_feature_cat.size()),
                   static_cast<long long>(actual.area_feature_cat.size())});
    return out;
  }
  for (std::size_t u = 0; u < expected.area_feature_cat.size(); ++u) {
    std::vector<Discrepancy> local;
    compare("area_feature_cat", expected.area_feature_cat[u], actual.area_feature_cat[u],
            {L, priors.categories[u]}, local);
    for (auto& d : local) {
      // reported as [i][u][v]
      d.index.insert(d.index.begin() + 1, static_cast<int>(u));
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::string describe(const Discrepancy& d) {
  std::ostringstream os;
  os << d.tensor;
  for (int i : d.index) os << '[' << i << ']';
  os << ": expected " << d.expected << ", found " << d.actual;
  return os.str();
}

std::vector<std::vector<double>> region_posterior(const CountTensors& counts, const Priors& priors) {
  const int F = priors.num_features();
  const int C = priors.categories[F];
  const double delta = priors.delta[F];
  std::vector<std::vector<double>> out(priors.areas, std::vector<double>(C));
  for (int i = 0; i < priors.areas; ++i) {
    double total = 0.0;
    for (int c = 0; c < C; ++c) total += counts.feature(F, i, c) + delta;
    for (int c = 0; c < C; ++c) out[i][c] = (counts.feature(F, i, c) + delta) / total;
  }
  return out;
}

json hyperparams_to_json(const Hyperparams& hp) {
  json j = {{"areas", hp.areas},
            {"topics", hp.topics},
            {"alpha", hp.alpha_value()},
            {"beta", hp.beta},
            {"gamma", hp.gamma},
            {"delta", hp.delta},
            {"default_delta", hp.default_delta},
            {"lambda", hp.lambda},
            {"prior_mean", {hp.prior_mean.lat, hp.prior_mean.lon}},
            {"prior_scale", hp.prior_scale},
            {"gamma_shape", hp.gamma_shape},
            {"gamma_rate", hp.gamma_rate},
            {"gamma_parametrization", "shape-rate"},
            {"samples", hp.samples},
            {"burn_in", hp.burn_in},
            {"thin", hp.thin},
            {"em_iterations", hp.em_iterations},
            {"test_sweeps", hp.test_sweeps},
            {"sigma2_floor", hp.sigma2_floor},
            {"reseed_empty_areas", hp.reseed_empty_areas},
            {"mode", to_string(hp.mode)},
            {"seed", hp.seed}};
  return j;
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.areas = j.at("areas").get<int>();
  hp.topics = j.at("topics").get<int>();
  hp.alpha = j.at("alpha").get<double>();
  hp.beta = j.at("beta").get<double>();
  hp.gamma = j.at("gamma").get<double>();
  hp.delta = j.at("delta").get<std::vector<double>>();
  hp.default_delta = j.at("default_delta").get<double>();
  hp.lambda = j.at("lambda").get<double>();
  hp.prior_mean = {j.at("prior_mean").at(0).get<double>(), j.at("prior_mean").at(1).get<double>()};
  hp.prior_scale = j.at("prior_scale").get<double>();
  hp.gamma_shape = j.at("gamma_shape").get<double>();
  hp.gamma_rate = j.at("gamma_rate").get<double>();
  hp.samples = j.at("samples").get<int>();
  hp.burn_in = j.at("burn_in").get<int>();
  hp.thin = j.at("thin").get<int>();
  hp.em_iterations = j.at("em_iterations").get<int>();
  hp.test_sweeps = j.at("test_sweeps").get<int>();
  hp.sigma2_floor = j.at("sigma2_floor").get<double>();
  hp.reseed_empty_areas = j.at("reseed_empty_areas").get<bool>();
  hp.mode = conditional_mode_from_string(j.at("mode").get<std::string>());
  hp.seed = j.at("seed").get<std::uint64_t>();
  return hp;
}

namespace {

json coords_to_json(const std::vector<Coords>& cs) {
  json arr = json::array();
  for (const auto& c : cs) arr.push_back({c.lat, c.lon});
  return arr;
}

std::vector<Coords> coords_from_json(const json& arr) {
  std::vector<Coords> out;
  for (const auto& c : arr) out.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
  return out;
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  const CountTensors& c = model.counts;
  json counts = {{"areas", c.areas},
                 {"topics", c.topics},
                 {"vocab", c.vocab},
                 {"categories", c.categories},
                 {"topic_area_word", c.topic_area_word},
                 {"topic_area_total", c.topic_area_total},
                 {"area_word_total", c.area_word_total},
                 {"area_doc_count", c.area_doc_count},
                 {"area_feature_cat", c.area_feature_cat}};
  return {{"format", "rate-model"},
          {"version", kModelVersion},
          {"hyperparams", hyperparams_to_json(model.hyperparams)},
          {"schema", schema_to_json(model.schema)},
          {"counts", counts},
          {"gaussians", {{"mu", coords_to_json(model.gaussians.mu)}, {"sigma2", model.gaussians.sigma2}}},
          {"region_posterior", model.region_posterior},
          {"region_centers", coords_to_json(model.region_centers)}};
}

TrainedModel model_from_json(const json& j) {
  if (j.value("format", "") != "rate-model") throw ValidationError("not a model file");
  if (j.at("version").get<int>() != kModelVersion) {
    throw ValidationError("unsupported model version " + j.at("version").dump());
  }
  TrainedModel m;
  m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
  m.schema = schema_from_json(j.at("schema"));
  const json& c = j.at("counts");
  m.counts = CountTensors(c.at("areas").get<int>(), c.at("topics").get<int>(), c.at("vocab").get<int>(),
                          c.at("categories").get<std::vector<int>>());
  m.counts.topic_area_word = c.at("topic_area_word").get<std::vector<int>>();
  m.counts.topic_area_total = c.at("topic_area_total").get<std::vector<int>>();
  m.counts.area_word_total = c.at("area_word_total").get<std::vector<int>>();
  m.counts.area_doc_count = c.at("area_doc_count").get<std::vector<int>>();
  m.counts.area_feature_cat = c.at("area_feature_cat").get<std::vector<std::vector<int>>>();
  m.gaussians.mu = coords_from_json(j.at("gaussians").at("mu"));
  m.gaussians.sigma2 = j.at("gaussians").at("sigma2").get<std::vector<double>>();
  m.region_posterior = j.at("region_posterior").get<std::vector<std::vector<double>>>();
  m.region_centers = coords_from_json(j.at("region_centers"));

  const Priors pr = m.priors();
  if (m.counts.areas != pr.areas || m.counts.topics != pr.topics || m.counts.vocab != pr.vocab ||
      m.counts.categories != pr.categories || m.gaussians.size() != pr.areas ||
      static_cast<int>(m.gaussians.sigma2.size()) != pr.areas) {
    throw ValidationError("model file dimensions are inconsistent with its schema");
  }
  const CountTensors expected(pr.areas, pr.topics, pr.vocab, pr.categories);
  bool sizes_ok = m.counts.topic_area_word.size() == expected.topic_area_word.size() &&
                  m.counts.topic_area_total.size() == expected.topic_area_total.size() &&
                  m.counts.area_word_total.size() == expected.area_word_total.size() &&
                  m.counts.area_doc_count.size() == expected.area_doc_count.size() &&
                  m.counts.area_feature_cat.size() == expected.area_feature_cat.size() &&
                  m.region_posterior.size() == static_cast<std::size_t>(pr.areas);
  for (std::size_t u = 0; sizes_ok && u < expected.area_feature_cat.size(); ++u) {
    sizes_ok = m.counts.area_feature_cat[u].size() == expected.area_feature_cat[u].size();
  }
  if (!sizes_ok) throw ValidationError("model file count tensors have the wrong size");
  for (double s2 : m.gaussians.sigma2) {
    if (!(s2 > 0.0) || !std::isfinite(s2)) throw ValidationError("model file has a non-positive area variance");
  }
  return m;
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << model_to_json(model).dump() << '\n';
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ValidationError("malformed model file " + path + ": " + e.what());
  }
}

}  // namespace rate

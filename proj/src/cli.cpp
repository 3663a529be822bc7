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

#include "rate/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rate/em.hpp"
#include "rate/predict.hpp"

namespace rate {

using nlohmann::json;

namespace {

unsigned thread_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

// Writes to `path`, or to `fallback` when no path was given.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
  } else {
    auto out = open_output(path);
    write(out);
  }
}

Hyperparams resolved_hyperparams(const RunConfig& c) {
  Hyperparams hp = c.hp;
  if (c.region_delta) {
    hp.delta.assign(c.features.size(), hp.default_delta);
    hp.delta.push_back(*c.region_delta);
  }
  return hp;
}

std::vector<LabeledPoint> truth_from_records(const std::vector<RawRecord>& records, const TrainedModel* model) {
  std::vector<LabeledPoint> truth;
  truth.reserve(records.size());
  const bool cells = model != nullptr && !model->region_centers.empty();
  for (const auto& rec : records) {
    LabeledPoint lp;
    if (rec.latitude && rec.longitude) lp.coords = Coords{*rec.latitude, *rec.longitude};
    if (cells) {
      if (lp.coords) {
        const int k = static_cast<int>(model->region_centers.size());
        lp.region = region_token(nearest_center(model->region_centers, *lp.coords), k);
      }
    } else {
      lp.region = rec.region;
    }
    truth.push_back(std::move(lp));
  }
  return truth;
}

std::vector<std::string> read_stopwords(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(w);
  }
  return words;
}

}  // namespace

int cmd_train(const RunConfig& c, std::ostream& out) {
  if (c.input.empty() || c.model.empty()) throw ValidationError("train needs --input and --model");
  auto records = read_jsonl_file(c.input, c.features);

  std::vector<std::size_t> missing;
  for (const auto& rec : records) {
    if (!rec.latitude || !rec.longitude || (!c.kmeans_regions && !rec.region)) missing.push_back(rec.line);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "training records missing region/lat/lon on line(s):";
    for (auto l : missing) msg << ' ' << l;
    throw ValidationError(msg.str());
  }

  TrainOptions options;
  options.audit_every = c.audit_every;
  const Hyperparams hp = resolved_hyperparams(c);
  if (c.kmeans_regions) {
    std::vector<Coords> coords;
    for (const auto& rec : records) coords.push_back({*rec.latitude, *rec.longitude});
    const KMeansResult km = kmeans_regions(coords, c.k, derive_seed(hp.seed, 3));
    for (std::size_t i = 0; i < records.size(); ++i) records[i].region = region_token(km.labels[i], c.k);
    options.region_centers = km.centers;
  }

  const CorpusSchema schema = build_schema(records, c.min_count, c.features);
  const auto docs = index_corpus(records, schema);
  const TrainResult result = train(docs, schema, hp, options);
  save_model(result.model, c.model);

  if (!c.schema.empty()) open_output(c.schema) << schema_to_json(schema).dump(2) << '\n';
  if (!c.report.empty()) open_output(c.report) << report_to_json(result.report).dump(2) << '\n';
  if (!c.trace.empty()) {
    auto trace = open_output(c.trace);
    write_trace_csv(trace, result.report);
  }
  out << "trained on " << docs.size() << " documents, vocabulary " << schema.vocabulary.size() << ", final log joint "
      << result.report.log_joint.back() << '\n';
  return 0;
}

int cmd_predict(const RunConfig& c, std::ostream& out) {
  if (c.model.empty() || c.input.empty() || c.output.empty()) {
    throw ValidationError("predict needs --model, --input and --output");
  }
  const TrainedModel model = load_model(c.model);
  if (c.features_given && c.features != model.schema.feature_names) {
    throw ValidationError("feature set does not match the model schema");
  }
  const auto records = read_jsonl_file(c.input, model.schema.feature_names);
  const auto docs = index_corpus(records, model.schema);

  const auto start = std::chrono::steady_clock::now();
  const auto predictions = predict_corpus(model, docs, c.hp.seed, thread_count(c.threads));
  const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;

  auto file = open_output(c.output);
  write_predictions_csv(file, to_labeled(model, predictions));
  const double per_doc = docs.empty() ? 0.0 : elapsed.count() / static_cast<double>(docs.size());
  out << "predicted " << docs.size() << " documents, mean " << per_doc << " ms/doc\n";
  return 0;
}

int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw ValidationError("evaluate needs --input");
  if (c.model.empty() && c.predictions.empty()) throw ValidationError("evaluate needs --model or --predictions");

  std::optional<TrainedModel> model;
  if (!c.model.empty()) model = load_model(c.model);
  const auto features = model ? model->schema.feature_names : c.features;
  const auto records = read_jsonl_file(c.input, features);
  const auto truth = truth_from_records(records, model ? &*model : nullptr);

  std::vector<LabeledPoint> predicted;
  if (!c.predictions.empty()) {
    std::ifstream in(c.predictions);
    if (!in) throw ValidationError("cannot open " + c.predictions);
    predicted = read_predictions_csv(in);
  } else {
    const auto docs = index_corpus(records, model->schema);
    predicted = to_labeled(*model, predict_corpus(*model, docs, c.hp.seed, thread_count(c.threads)));
  }
  const EvaluationReport report = evaluate(predicted, truth);
  emit(c.output, out, [&](std::ostream& os) { os << evaluation_to_json(report).dump(2) << '\n'; });
  return 0;
}

int cmd_generate(const RunConfig& c, std::ostream& out) {
  if (c.output.empty()) throw ValidationError("generate needs --output");
  SyntheticCorpus corpus;
  if (c.scenario) {
    ScenarioConfig sc = c.scenario_config;
    sc.areas = c.hp.areas;
    sc.topics = c.hp.topics;
    sc.docs = c.dims.docs;
    sc.tokens_per_doc = c.dims.tokens_per_doc;
    sc.vocab = c.dims.vocab;
    sc.feature_sizes = c.dims.feature_sizes;
    sc.seed = c.hp.seed;
    corpus = separated_scenario(sc);
  } else {
    corpus = forward_sample(resolved_hyperparams(c), c.dims, c.hp.seed);
  }
  {
    auto file = open_output(c.output);
    write_jsonl(file, corpus.records);
  }
  if (!c.truth.empty()) open_output(c.truth) << truth_to_json(corpus.truth).dump() << '\n';
  out << "generated " << corpus.records.size() << " documents\n";
  return 0;
}

std::vector<AreaWords> top_words(const TrainedModel& model, int top_n, int top_areas,
                                 const std::vector<std::string>& stopwords) {
  const CountTensors& counts = model.counts;
  const Priors priors = model.priors();
  const std::set<std::string> stop(stopwords.begin(), stopwords.end());

  std::vector<int> order(priors.areas);
  for (int i = 0; i < priors.areas; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts.area_doc_count[a] > counts.area_doc_count[b]; });
  if (top_areas > 0 && top_areas < priors.areas) order.resize(top_areas);

  std::vector<AreaWords> out;
  for (int i : order) {
    AreaWords aw;
    aw.area = i;
    aw.center = model.gaussians.mu[i];
    aw.documents = counts.area_doc_count[i];
    double denom = 0.0;
    for (int j = 0; j < priors.topics; ++j) denom += counts.topic_total(j, i) + priors.vocab * priors.beta;
    std::vector<std::pair<double, int>> mass;
    for (int r = 0; r < priors.vocab; ++r) {
      if (stop.contains(model.schema.vocabulary.at(r))) continue;
      double m = 0.0;
      for (int j = 0; j < priors.topics; ++j) m += counts.word(j, i, r) + priors.beta;
      mass.emplace_back(m / denom, r);
    }
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_n, 0)), mass.size());
    std::partial_sort(mass.begin(), mass.begin() + static_cast<std::ptrdiff_t>(n), mass.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t w = 0; w < n; ++w) aw.words.emplace_back(model.schema.vocabulary.at(mass[w].second), mass[w].first);
    out.push_back(std::move(aw));
  }
  return out;
}

int cmd_topwords(const RunConfig& c, std::ostream& out) {
  if (c.model.empty()) throw ValidationError("topwords needs --model");
  const TrainedModel model = load_model(c.model);
  json areas = json::array();
  for (const auto& aw : top_words(model, c.top_n, c.top_areas, read_stopwords(c.stopwords))) {
    json words = json::array();
    for (const auto& [w, prob] : aw.words) words.push_back({{"word", w}, {"probability", prob}});
    areas.push_back({{"area", aw.area},
                     {"center", {aw.center.lat, aw.center.lon}},
                     {"documents", aw.documents},
                     {"words", words}});
  }
  emit(c.output, out, [&](std::ostream& os) { os << json{{"areas", areas}}.dump(2) << '\n'; });
  return 0;
}

namespace {

void add_hyperparam_flags(CLI::App* app, RunConfig& c) {
  app->add_option("--areas,-L", c.hp.areas, "Number of latent areas");
  app->add_option("--topics,-T", c.hp.topics, "Topics per area");
  app->add_option_function<double>("--alpha", [&c](double a) { c.hp.alpha = a; }, "Topic prior (default 50/(L*T))");
  app->add_option("--beta", c.hp.beta, "Word prior");
  app->add_option("--gamma", c.hp.gamma, "Area prior");
  app->add_option("--delta", c.hp.default_delta, "Categorical feature prior");
  app->add_option_function<double>("--region-delta", [&c](double d) { c.region_delta = d; }, "Region feature prior");
  app->add_option("--lambda", c.hp.lambda, "Ridge weight on sigma");
  app->add_option("--samples,-S", c.hp.samples, "Snapshots kept per E-step and per test chain");
  app->add_option("--burn-in", c.hp.burn_in, "Burn-in sweeps per E-step");
  app->add_option("--thin", c.hp.thin, "Sweeps between snapshots");
  app->add_option("--em-iterations", c.hp.em_iterations, "EM iterations");
  app->add_option("--test-sweeps", c.hp.test_sweeps, "Sweeps per test-time chain");
  app->add_option("--sigma2-floor", c.hp.sigma2_floor, "Variance floor for degenerate areas (deg^2)");
  app->add_flag("--reseed-empty-areas", c.hp.reseed_empty_areas, "Move empty areas onto outlying documents");
  app->add_option_function<std::string>(
      "--mode", [&c](const std::string& m) { c.hp.mode = conditional_mode_from_string(m); },
      "Area conditional: joint-ratio (default) or paper-literal");
  app->add_option("--seed", c.hp.seed, "RNG seed");
  app->add_option("--min-count", c.min_count, "Minimum corpus frequency for a word");
  app->add_option_function<std::vector<std::string>>(
      "--features",
      [&c](const std::vector<std::string>& f) {
        c.features = f;
        c.features_given = true;
      },
      "Categorical feature names")
      ->delimiter(',');
  app->add_option("--threads", c.threads, "Prediction threads (0 = all cores)");
  app->add_option("--audit-every", c.audit_every, "Audit counts every N sweeps (0 = off)");
}

// Fills options not given on the command line from a JSON object whose keys
// are long option names without the leading dashes.
void apply_config_file(CLI::App* app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  auto to_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = app->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ValidationError("unknown config key '" + key + "' for " + app->get_name());
    }
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(to_text(v));
    } else {
      opt->add_result(to_text(value));
    }
    opt->run_callback();
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::string config_path;
  CLI::App app{"Location estimation for short geotagged documents with a geographic topic model"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Build the schema, train with Gibbs-EM and save the model");
  auto* predict_cmd = app.add_subcommand("predict", "Predict coordinates and regions for a JSONL file");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model or an external prediction file");
  auto* generate_cmd = app.add_subcommand("generate", "Sample a synthetic corpus from the generative model");
  auto* topwords_cmd = app.add_subcommand("topwords", "Report the top words of the most populated areas");

  for (auto* cmd : {train_cmd, predict_cmd, evaluate_cmd, generate_cmd, topwords_cmd}) {
    cmd->add_option("--config", config_path, "JSON file with option defaults");
    add_hyperparam_flags(cmd, c);
  }

  train_cmd->add_option("--input,-i", c.input, "Training JSONL");
  train_cmd->add_option("--model,-m", c.model, "Output model file");
  train_cmd->add_option("--report", c.report, "Training report JSON");
  train_cmd->add_option("--trace", c.trace, "Log-joint trace CSV");
  train_cmd->add_option("--schema", c.schema, "Schema JSON");
  train_cmd->add_flag("--kmeans-regions", c.kmeans_regions, "Replace region labels by K-means cells");
  train_cmd->add_option("--k", c.k, "Number of K-means cells");

  predict_cmd->add_option("--model,-m", c.model, "Model file");
  predict_cmd->add_option("--input,-i", c.input, "Test JSONL");
  predict_cmd->add_option("--output,-o", c.output, "Predictions CSV");

  evaluate_cmd->add_option("--input,-i", c.input, "Labeled test JSONL");
  evaluate_cmd->add_option("--model,-m", c.model, "Model file");
  evaluate_cmd->add_option("--predictions,-p", c.predictions, "External predictions CSV (doc_id,region,lat,lon)");
  evaluate_cmd->add_option("--output,-o", c.output, "Metrics JSON (default stdout)");

  generate_cmd->add_option("--output,-o", c.output, "Output JSONL");
  generate_cmd->add_option("--truth", c.truth, "Ground-truth JSON sidecar");
  generate_cmd->add_option("--docs,-D", c.dims.docs, "Number of documents");
  generate_cmd->add_option("--tokens,-N", c.dims.tokens_per_doc, "Tokens per document");
  generate_cmd->add_option("--vocab,-V", c.dims.vocab, "Vocabulary size");
  generate_cmd->add_option("--feature-sizes", c.dims.feature_sizes, "Categories per feature")->delimiter(',');
  generate_cmd->add_option("--regions", c.dims.regions, "Number of region labels");
  generate_cmd->add_flag("--scenario", c.scenario, "Well-separated grid scenario");
  generate_cmd->add_option("--spread", c.scenario_config.spread_deg, "Scenario grid spacing (deg)");
  generate_cmd->add_option("--sigma", c.scenario_config.sigma_deg, "Scenario coordinate sd (deg)");
  generate_cmd->add_option("--region-smoothing", c.scenario_config.region_smoothing, "Scenario region label noise");

  topwords_cmd->add_option("--model,-m", c.model, "Model file");
  topwords_cmd->add_option("--top-n", c.top_n, "Words per area");
  topwords_cmd->add_option("--top-areas", c.top_areas, "Areas to list (0 = all)");
  topwords_cmd->add_option("--stopwords", c.stopwords, "Whitespace-separated stop-word file to exclude");
  topwords_cmd->add_option("--output,-o", c.output, "Report JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    for (auto* cmd : app.get_subcommands()) {
      if (!config_path.empty()) apply_config_file(cmd, config_path);
      c.command = cmd->get_name();
    }
    if (c.command == "train") return cmd_train(c, out);
    if (c.command == "predict") return cmd_predict(c, out);
    if (c.command == "evaluate") return cmd_evaluate(c, out);
    if (c.command == "generate") return cmd_generate(c, out);
    if (c.command == "topwords") return cmd_topwords(c, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace rate

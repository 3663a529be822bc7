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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "rate/em.hpp"

using namespace rate;

namespace {

std::vector<Document> located(const std::vector<Coords>& points) {
  std::vector<Document> docs;
  for (const auto& c : points) docs.push_back(fixtures::doc({}, {}, 0, c));
  return docs;
}

double sigma_residual(double s2, double lambda, int members, double sum_sq) {
  return members * (lambda * s2 * s2 + s2) - sum_sq / 3.0;
}

}  // namespace

TEST_CASE("m_step_mu") {
  SUBCASE("two-point mean") {
    auto docs = located({{0.0, 0.0}, {2.0, 4.0}});
    const auto up = m_step_mu({{{0, 0}, {}}}, docs, {{9.0, 9.0}});
    CHECK(up.mu[0] == Coords{1.0, 2.0});
    CHECK(up.members[0] == 2);
  }
  SUBCASE("pooled over snapshots") {
    auto docs = located({{0.0, 0.0}, {4.0, 0.0}});
    const auto up = m_step_mu({{{0, 1}, {}}, {{1, 0}, {}}}, docs, {{9.0, 9.0}, {9.0, 9.0}});
    CHECK(up.mu[0] == Coords{2.0, 0.0});
    CHECK(up.mu[1] == Coords{2.0, 0.0});
    CHECK(up.members[0] == 2);
  }
  SUBCASE("empty area keeps its center") {
    auto docs = located({{1.0, 1.0}});
    const auto up = m_step_mu({{{0}, {}}}, docs, {{0.0, 0.0}, {-3.0, 7.5}});
    CHECK(up.mu[1] == Coords{-3.0, 7.5});
    CHECK(up.members[1] == 0);
  }
}

TEST_CASE("m_step_sigma") {
  SUBCASE("lambda 0") {
    auto docs = located({{1.0, 0.0}, {-1.0, 0.0}});
    const auto s2 = m_step_sigma({{{0, 0}, {}}}, docs, {{0.0, 0.0}}, 0.0, 1e-4);
    CHECK(std::abs(s2[0] - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(sigma_residual(s2[0], 0.0, 2, 2.0)) < 1e-12);
  }
  SUBCASE("lambda 1 with mean 2") {
    CHECK(sigma2_root(2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    const double s2 = sigma2_root(2.0, 1.0);
    CHECK(std::abs(s2 * s2 + s2 - 2.0) < 1e-15);
  }
  SUBCASE("degenerate areas get the floor") {
    auto docs = located({{1.0, 1.0}, {1.0, 1.0}});
    const auto s2 = m_step_sigma({{{0, 0}, {}}}, docs, {{1.0, 1.0}, {5.0, 5.0}}, 0.0, 1e-4);
    CHECK(s2[0] == 1e-4);
    CHECK(s2[1] == 1e-4);
  }
}

TEST_CASE("M-step stationarity on random configurations") {
  Rng rng(77);
  std::uniform_real_distribution<double> coord(-20.0, 20.0);
  std::uniform_real_distribution<double> log_lambda(-6.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int areas = 3;
    std::vector<Coords> pts;
    for (int k = 0; k < 40; ++k) pts.push_back({coord(rng), coord(rng)});
    auto docs = located(pts);
    std::vector<Snapshot> snaps(3);
    for (auto& s : snaps) {
      for (int k = 0; k < 40; ++k) s.p.push_back(static_cast<int>(rng() % areas));
    }
    const double lambda = trial % 5 == 0 ? 0.0 : std::pow(10.0, log_lambda(rng));
    const auto up = m_step_mu(snaps, docs, std::vector<Coords>(areas, Coords{0.0, 0.0}));
    const auto s2 = m_step_sigma(snaps, docs, up.mu, lambda, 1e-12);
    for (int i = 0; i < areas; ++i) {
      if (up.members[i] == 0) continue;
      double rl = 0.0, rn = 0.0, sum_sq = 0.0, scale = 0.0;
      for (const auto& s : snaps) {
        for (int k = 0; k < 40; ++k) {
          if (s.p[k] != i) continue;
          rl += pts[k].lat - up.mu[i].lat;
          rn += pts[k].lon - up.mu[i].lon;
          sum_sq += squared_distance(pts[k], up.mu[i]);
          scale += std::abs(pts[k].lat) + std::abs(pts[k].lon);
        }
      }
      CHECK(std::abs(rl) / scale < 1e-10);
      CHECK(std::abs(rn) / scale < 1e-10);
      CHECK(std::abs(sigma_residual(s2[i], lambda, up.members[i], sum_sq)) / (sum_sq / 3.0) < 1e-10);
    }
  }
}

TEST_CASE("sigma2_root properties") {
  CHECK(std::abs(sigma2_root(3.7, 1e-12) - 3.7) / 3.7 < 1e-6);
  CHECK(sigma2_root(3.7, 0.0) == 3.7);
  double prev = 0.0;
  for (double a = 0.01; a < 1e4; a *= 1.7) {
    const double s = sigma2_root(a, 0.5);
    CHECK(s >= prev);
    prev = s;
  }
  prev = INFINITY;
  for (double lambda = 0.0; lambda < 1e3; lambda = lambda * 3.0 + 1e-6) {
    const double s = sigma2_root(12.0, lambda);
    CHECK(s <= prev);
    CHECK(s > 0.0);
    prev = s;
  }
  // Large lambda times mean stays accurate in the stable form.
  const double s = sigma2_root(1e8, 1e8);
  CHECK(std::abs(1e8 * s * s + s - 1e8) / 1e8 < 1e-12);
}

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.docs = 900;
  cfg.seed = 11;
  return cfg;
}

Hyperparams small_hp(int areas) {
  Hyperparams hp;
  hp.areas = areas;
  hp.burn_in = 20;
  hp.samples = 5;
  hp.em_iterations = 4;
  return hp;
}

}  // namespace

TEST_CASE("train") {
  const auto data = fixtures::indexed_scenario(small_scenario());

  SUBCASE("trace length matches iterations") {
    Hyperparams hp = small_hp(3);
    hp.em_iterations = 1;
    hp.samples = 1;
    hp.test_sweeps = 1;
    const auto r = train(data.docs, data.schema, hp);
    CHECK(r.report.log_joint.size() == 1);
    CHECK(r.report.sigma2.size() == 1);
    CHECK(r.report.mu_shift_km.size() == 1);
    std::ostringstream csv;
    write_trace_csv(csv, r.report);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(report_to_json(r.report)["log_joint"].size() == 1);
  }

  SUBCASE("deterministic under a fixed seed") {
    const auto a = train(data.docs, data.schema, small_hp(3));
    const auto b = train(data.docs, data.schema, small_hp(3));
    CHECK(model_to_json(a.model).dump() == model_to_json(b.model).dump());
    CHECK(a.report.log_joint == b.report.log_joint);
  }

  SUBCASE("recovers separated centers") {
    const auto truth = separated_scenario(small_scenario()).truth;
    const auto r = train(data.docs, data.schema, small_hp(3));
    std::vector<int> perm{0, 1, 2};
    double best = INFINITY;
    do {
      double worst = 0.0;
      for (int i = 0; i < 3; ++i) {
        const auto& m = r.model.gaussians.mu[perm[i]];
        worst = std::max({worst, std::abs(m.lat - truth.mu[i].lat), std::abs(m.lon - truth.mu[i].lon)});
      }
      best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(best < 0.2);
    CHECK(std::accumulate(r.report.final_occupancy.begin(), r.report.final_occupancy.end(), 0) == 900);
  }

  SUBCASE("single area") {
    const auto r = train(data.docs, data.schema, small_hp(1));
    CHECK(r.report.final_occupancy == std::vector<int>{900});
    CHECK(r.model.region_posterior.size() == 1);
  }

  SUBCASE("log-joint trend is non-decreasing") {
    Hyperparams hp = small_hp(3);
    hp.topics = 3;
    hp.burn_in = 2;
    hp.samples = 2;
    hp.em_iterations = 12;
    const auto r = train(data.docs, data.schema, hp);
    std::vector<double> diffs;
    for (std::size_t i = 1; i < r.report.log_joint.size(); ++i) {
      diffs.push_back(r.report.log_joint[i] - r.report.log_joint[i - 1]);
    }
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    CHECK(diffs[diffs.size() / 2] >= 0.0);
  }

  SUBCASE("documents without labels are rejected") {
    auto docs = data.docs;
    docs[3].coords.reset();
    CHECK_THROWS_AS(train(docs, data.schema, small_hp(3)), ValidationError);
  }
}

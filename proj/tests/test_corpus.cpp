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

#include <sstream>

#include "doctest.h"
#include "rate/corpus.hpp"

using namespace rate;

namespace {

RawRecord record(std::string text, std::map<std::string, std::string> cats = {}, std::optional<std::string> region = {},
                 std::optional<double> lat = {}, std::optional<double> lon = {}) {
  RawRecord r;
  r.text = std::move(text);
  r.categorical = std::move(cats);
  r.region = std::move(region);
  r.latitude = lat;
  r.longitude = lon;
  return r;
}

}  // namespace

TEST_CASE("preprocess_text") {
  CHECK(preprocess_text("", "").empty());
  CHECK(preprocess_text("Rain in #London http://t.co/x", "UK") ==
        std::vector<std::string>{"rain", "in", "#london", "uk"});
  CHECK(preprocess_text("@bob hello", "") == std::vector<std::string>{"@bob", "hello"});
  CHECK(preprocess_text("see https://a.b and www.c.d now!", "") == std::vector<std::string>{"see", "and", "now!"});
  CHECK(preprocess_text("  Tabs\tand\nnewlines ", " Paris, France") ==
        std::vector<std::string>{"tabs", "and", "newlines", "paris,", "france"});
}

TEST_CASE("build_schema filters by frequency") {
  std::vector<RawRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(record("a"));
  for (int i = 0; i < 9; ++i) recs.push_back(record("b"));
  auto schema = build_schema(recs, 10);
  CHECK(schema.vocabulary.strings() == std::vector<std::string>{"a"});

  auto all = build_schema(recs, 1);
  CHECK(all.vocabulary.strings() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("build_schema feature dictionaries carry a missing category") {
  std::vector<RawRecord> recs{record("x", {{"user_language", "en"}}), record("y", {{"user_language", "fr"}}),
                              record("z", {}, std::string("UK"))};
  auto schema = build_schema(recs, 1);
  REQUIRE(schema.num_features() == 3);
  CHECK(schema.features[0].size() == 3);
  CHECK(schema.features[0].at(kMissingId) == kMissingCategory);
  CHECK(schema.features[0].find("en").has_value());
  CHECK(schema.features[0].find("fr").has_value());
  CHECK(schema.features[2].size() == 1);  // time_zone never observed
  CHECK(schema.regions.strings() == std::vector<std::string>{"UK"});
  CHECK(schema.category_sizes() == std::vector<int>{3, 1, 1, 1});
}

TEST_CASE("build_schema errors") {
  CHECK_THROWS_AS(build_schema({}, 10), ValidationError);
  CHECK_THROWS_AS(build_schema({record("a")}, 0), ValidationError);
}

TEST_CASE("index_corpus") {
  std::vector<RawRecord> recs{record("a a b", {{"user_language", "en"}, {"time_zone", "CET"}}, "FR", 48.0, 2.0),
                              record("c", {{"user_language", "en"}}, "FR", 48.0, 2.0)};
  auto schema = build_schema(recs, 2);
  auto docs = index_corpus(recs, schema);
  REQUIRE(docs.size() == 2);
  CHECK(decode_tokens(docs[0], schema) == std::vector<std::string>{"a", "a"});
  CHECK(docs[1].tokens.empty());
  CHECK(docs[1].feature_values[2] == kMissingId);
  CHECK(schema.features[2].at(docs[0].feature_values[2]) == "CET");
  CHECK(docs[0].region == schema.regions.find("FR"));
  REQUIRE(docs[0].coords.has_value());
  CHECK(docs[0].coords->lat == 48.0);

  // unseen category and region at test time
  std::vector<RawRecord> test{record("a zzz", {{"user_language", "de"}}, "XX")};
  auto tdocs = index_corpus(test, schema);
  CHECK(tdocs[0].tokens == std::vector<int>{*schema.vocabulary.find("a")});
  CHECK(tdocs[0].feature_values[0] == kMissingId);
  CHECK_FALSE(tdocs[0].region.has_value());
  CHECK_FALSE(tdocs[0].coords.has_value());
}

TEST_CASE("index_corpus rejects bad coordinates with record indices") {
  std::vector<RawRecord> recs{record("a", {}, "R", 10.0, 10.0), record("a", {}, "R", 91.0, 0.0),
                              record("a", {}, "R", 0.0, -181.0), record("a", {}, "R", 5.0, {})};
  auto schema = build_schema(recs, 1);
  try {
    index_corpus(recs, schema);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "invalid coordinates in record(s): 1 2 3");
  }
}

TEST_CASE("round trip and determinism properties") {
  // Hand-rolled generator: random tokens over a small alphabet.
  Rng rng(11);
  const std::vector<std::string> alphabet{"Foo", "bar", "#baz", "@qux", "www.x.y", "https://z", "é", "x!"};
  const std::vector<std::string> langs{"en", "fr", "de"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RawRecord> recs;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      std::string text;
      const int len = static_cast<int>(rng() % 6);
      for (int t = 0; t < len; ++t) text += alphabet[rng() % alphabet.size()] + " ";
      std::map<std::string, std::string> cats;
      if (rng() % 3) cats["user_language"] = langs[rng() % langs.size()];
      recs.push_back(record(text, cats));
    }
    const int min_count = 1 + static_cast<int>(rng() % 4);
    const auto schema = build_schema(recs, min_count);
    const auto docs = index_corpus(recs, schema);
    CHECK(schema == build_schema(recs, min_count));

    std::map<std::string, int> freq;
    for (const auto& r : recs) {
      for (const auto& t : preprocess_text(r.text, r.profile_location)) ++freq[t];
    }
    for (std::size_t k = 0; k < recs.size(); ++k) {
      std::vector<std::string> kept;
      for (const auto& t : preprocess_text(recs[k].text, "")) {
        if (freq[t] >= min_count) kept.push_back(t);
      }
      CHECK(decode_tokens(docs[k], schema) == kept);
      const auto it = recs[k].categorical.find("user_language");
      const std::string decoded = schema.features[0].at(docs[k].feature_values[0]);
      CHECK(decoded == (it == recs[k].categorical.end() ? std::string(kMissingCategory) : it->second));
    }
  }
}

TEST_CASE("jsonl parsing") {
  std::istringstream in(
      R"({"text":"Hello","profile_location":"Paris","user_language":"fr","region":"FR","lat":48.8,"lon":2.3,"extra":1})"
      "\n\n"
      R"({"text":"x","lat":null})"
      "\n");
  auto recs = read_jsonl(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].profile_location == "Paris");
  CHECK(recs[0].categorical.at("user_language") == "fr");
  CHECK(recs[0].latitude == 48.8);
  CHECK(recs[0].line == 1);
  CHECK(recs[1].line == 3);
  CHECK_FALSE(recs[1].latitude.has_value());

  std::istringstream bad("{\"text\":\"ok\"}\n{not json\n");
  try {
    read_jsonl(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).starts_with("line 2:"));
  }

  std::ostringstream out;
  write_jsonl(out, recs);
  std::istringstream again(out.str());
  auto back = read_jsonl(again);
  CHECK(back[0].text == "Hello");
  CHECK(back[0].region == std::optional<std::string>("FR"));
}

TEST_CASE("schema json round trip") {
  std::vector<RawRecord> recs{record("a b", {{"user_language", "en"}}, "FR", 1.0, 1.0)};
  auto schema = build_schema(recs, 1);
  auto j = schema_to_json(schema);
  CHECK(j["version"] == kSchemaVersion);
  CHECK(schema_from_json(j) == schema);
  j["version"] = 99;
  CHECK_THROWS_AS(schema_from_json(j), ValidationError);
}

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

#include "rate/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace rate {

using nlohmann::json;

Dictionary::Dictionary(std::vector<std::string> strings) {
  for (const auto& s : strings) add(s);
}

int Dictionary::add(const std::string& s) {
  auto [it, inserted] = ids_.try_emplace(s, size());
  if (inserted) strings_.push_back(s);
  return it->second;
}

std::optional<int> Dictionary::find(std::string_view s) const {
  auto it = ids_.find(std::string(s));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> default_feature_names() { return {"user_language", "tweet_language", "time_zone"}; }

std::vector<int> CorpusSchema::category_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(features.size() + 1);
  for (const auto& f : features) sizes.push_back(f.size());
  sizes.push_back(regions.size());
  return sizes;
}

namespace {

bool is_url(std::string_view token) {
  return token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.");
}

void append_tokens(std::string_view text, std::vector<std::string>& out) {
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty() && !is_url(current)) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty() && !is_url(current)) out.push_back(std::move(current));
}

}  // namespace

std::vector<std::string> preprocess_text(std::string_view text, std::string_view profile_location) {
  std::vector<std::string> tokens;
  append_tokens(text, tokens);
  append_tokens(profile_location, tokens);
  return tokens;
}

CorpusSchema build_schema(const std::vector<RawRecord>& records, int min_count,
                          std::vector<std::string> feature_names) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  if (records.empty()) throw ValidationError("empty corpus");

  std::map<std::string, long long> frequency;
  std::vector<std::set<std::string>> categories(feature_names.size());
  std::set<std::string> regions;
  for (const auto& rec : records) {
    for (auto& tok : preprocess_text(rec.text, rec.profile_location)) ++frequency[std::move(tok)];
    for (std::size_t u = 0; u < feature_names.size(); ++u) {
      auto it = rec.categorical.find(feature_names[u]);
      if (it != rec.categorical.end() && it->second != kMissingCategory) categories[u].insert(it->second);
    }
    if (rec.region) regions.insert(*rec.region);
  }

  CorpusSchema schema;
  schema.min_count = min_count;
  for (const auto& [word, n] : frequency) {
    if (n >= min_count) schema.vocabulary.add(word);
  }
  for (std::size_t u = 0; u < feature_names.size(); ++u) {
    Dictionary dict;
    dict.add(kMissingCategory);
    for (const auto& c : categories[u]) dict.add(c);
    schema.features.push_back(std::move(dict));
  }
  for (const auto& r : regions) schema.regions.add(r);
  schema.feature_names = std::move(feature_names);
  return schema;
}

std::vector<Document> index_corpus(const std::vector<RawRecord>& records, const CorpusSchema& schema) {
  std::vector<Document> docs;
  docs.reserve(records.size());
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const RawRecord& rec = records[k];
    Document doc;
    for (const auto& tok : preprocess_text(rec.text, rec.profile_location)) {
      if (auto id = schema.vocabulary.find(tok)) doc.tokens.push_back(*id);
    }
    for (std::size_t u = 0; u < schema.features.size(); ++u) {
      auto it = rec.categorical.find(schema.feature_names[u]);
      std::optional<int> id;
      if (it != rec.categorical.end()) id = schema.features[u].find(it->second);
      doc.feature_values.push_back(id.value_or(kMissingId));
    }
    if (rec.region) doc.region = schema.regions.find(*rec.region);

    const bool has_lat = rec.latitude.has_value();
    const bool has_lon = rec.longitude.has_value();
    if (has_lat != has_lon) {
      bad.push_back(k);
    } else if (has_lat) {
      const double lat = *rec.latitude;
      const double lon = *rec.longitude;
      if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
        bad.push_back(k);
      } else {
        doc.coords = Coords{lat, lon};
      }
    }
    docs.push_back(std::move(doc));
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "invalid coordinates in record(s):";
    for (auto k : bad) msg << ' ' << k;
    throw ValidationError(msg.str());
  }
  return docs;
}

std::vector<std::string> decode_tokens(const Document& doc, const CorpusSchema& schema) {
  std::vector<std::string> out;
  out.reserve(doc.tokens.size());
  for (int id : doc.tokens) out.push_back(schema.vocabulary.at(id));
  return out;
}

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<double> optional_number(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

std::vector<RawRecord> read_jsonl(std::istream& in, const std::vector<std::string>& feature_names) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw ValidationError("expected a JSON object");
      RawRecord rec;
      rec.line = line_no;
      rec.text = optional_string(obj, "text").value_or("");
      rec.profile_location = optional_string(obj, "profile_location").value_or("");
      for (const auto& name : feature_names) {
        if (auto v = optional_string(obj, name.c_str())) rec.categorical.emplace(name, *v);
      }
      rec.region = optional_string(obj, "region");
      rec.latitude = optional_number(obj, "lat");
      rec.longitude = optional_number(obj, "lon");
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<RawRecord> read_jsonl_file(const std::string& path, const std::vector<std::string>& feature_names) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_jsonl(in, feature_names);
}

void write_jsonl(std::ostream& out, const std::vector<RawRecord>& records) {
  for (const auto& rec : records) {
    json obj;
    obj["text"] = rec.text;
    if (!rec.profile_location.empty()) obj["profile_location"] = rec.profile_location;
    for (const auto& [name, value] : rec.categorical) obj[name] = value;
    if (rec.region) obj["region"] = *rec.region;
    if (rec.latitude) obj["lat"] = *rec.latitude;
    if (rec.longitude) obj["lon"] = *rec.longitude;
    out << obj.dump() << '\n';
  }
}

json schema_to_json(const CorpusSchema& schema) {
  json features = json::array();
  for (std::size_t u = 0; u < schema.features.size(); ++u) {
    features.push_back({{"name", schema.feature_names[u]}, {"categories", schema.features[u].strings()}});
  }
  return {{"format", "rate-schema"},
          {"version", kSchemaVersion},
          {"min_count", schema.min_count},
          {"vocabulary", schema.vocabulary.strings()},
          {"features", features},
          {"regions", schema.regions.strings()}};
}

CorpusSchema schema_from_json(const json& j) {
  if (j.value("format", "") != "rate-schema") throw ValidationError("not a schema document");
  if (j.at("version").get<int>() != kSchemaVersion) {
    throw ValidationError("unsupported schema version " + j.at("version").dump());
  }
  CorpusSchema schema;
  schema.min_count = j.at("min_count").get<int>();
  schema.vocabulary = Dictionary(j.at("vocabulary").get<std::vector<std::string>>());
  for (const auto& f : j.at("features")) {
    schema.feature_names.push_back(f.at("name").get<std::string>());
    Dictionary dict(f.at("categories").get<std::vector<std::string>>());
    if (dict.size() == 0 || dict.at(kMissingId) != kMissingCategory) {
      throw ValidationError("feature '" + schema.feature_names.back() + "' lacks the missing category");
    }
    schema.features.push_back(std::move(dict));
  }
  schema.regions = Dictionary(j.at("regions").get<std::vector<std::string>>());
  return schema;
}

}  // namespace rate

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

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "rate/common.hpp"

namespace rate {

/// One ingested JSONL line, before any id resolution.
struct RawRecord {
  std::string text;
  std::string profile_location;
  std::map<std::string, std::string> categorical;  // feature name -> value
  std::optional<std::string> region;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::size_t line = 0;  // 1-based source line, 0 when not read from a file
};

/// String <-> dense id bijection.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::string> strings);

  int add(const std::string& s);
  std::optional<int> find(std::string_view s) const;
  const std::string& at(int id) const { return strings_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(strings_.size()); }
  const std::vector<std::string>& strings() const { return strings_; }

  friend bool operator==(const Dictionary& a, const Dictionary& b) { return a.strings_ == b.strings_; }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, int> ids_;
};

inline constexpr const char* kMissingCategory = "<missing>";
inline constexpr int kMissingId = 0;
inline constexpr int kSchemaVersion = 1;

std::vector<std::string> default_feature_names();

/// Vocabulary, categorical feature dictionaries and region dictionary.
/// Every feature dictionary holds kMissingCategory at id kMissingId.
struct CorpusSchema {
  Dictionary vocabulary;
  std::vector<std::string> feature_names;
  std::vector<Dictionary> features;
  Dictionary regions;
  int min_count = 10;

  int num_features() const { return static_cast<int>(features.size()); }

  /// Category counts C_u for u in [0, F], the last entry being the region
  /// dictionary.
  std::vector<int> category_sizes() const;

  friend bool operator==(const CorpusSchema&, const CorpusSchema&) = default;
};

struct Document {
  std::vector<int> tokens;
  std::vector<int> feature_values;  // one id per schema feature
  std::optional<int> region;
  std::optional<Coords> coords;
};

/// Lowercases, splits on whitespace and drops URL tokens. Mentions,
/// hashtags, punctuation and stop words are kept as-is.
std::vector<std::string> preprocess_text(std::string_view text, std::string_view profile_location);

CorpusSchema build_schema(const std::vector<RawRecord>& records, int min_count = 10,
                          std::vector<std::string> feature_names = default_feature_names());

/// Resolves ids. Out-of-vocabulary tokens are dropped, unseen categories map
/// to the missing id and unseen regions to std::nullopt. Throws
/// ValidationError naming every record with invalid coordinates.
std::vector<Document> index_corpus(const std::vector<RawRecord>& records, const CorpusSchema& schema);

std::vector<std::string> decode_tokens(const Document& doc, const CorpusSchema& schema);

/// Parses JSONL. Blank lines are skipped; a malformed line throws
/// ValidationError with its line number.
std::vector<RawRecord> read_jsonl(std::istream& in,
                                  const std::vector<std::string>& feature_names = default_feature_names());
std::vector<RawRecord> read_jsonl_file(const std::string& path,
                                       const std::vector<std::string>& feature_names = default_feature_names());
void write_jsonl(std::ostream& out, const std::vector<RawRecord>& records);

nlohmann::json schema_to_json(const CorpusSchema& schema);
CorpusSchema schema_from_json(const nlohmann::json& j);

}  // namespace rate

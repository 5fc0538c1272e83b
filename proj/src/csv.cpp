// Copyright 2026 The fairacq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fairacq/dataset.hpp"
#include "fairacq/errors.hpp"

namespace fairacq {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// RFC-4180-ish: comma separated, double quotes escape commas and "" escapes a
// quote. Fields are trimmed.
std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(Trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(Trim(cur));
  return out;
}

std::vector<std::string> StringList(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const json& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const json& e : v) {
      out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    }
    return out;
  }
  if (v.is_number()) return {v.dump()};
  throw ConfigError(std::string("schema field '") + key + "' must be a string or list");
}

ColumnSpec ParseColumn(const json& j) {
  ColumnSpec c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
    return c;
  }
  c.name = j.at("name").get<std::string>();
  const std::string type = j.value("type", "numeric");
  if (type == "numeric") {
    c.kind = ColumnSpec::Kind::kNumeric;
  } else if (type == "categorical") {
    c.kind = ColumnSpec::Kind::kCategorical;
    const std::string enc = j.value("encoding", "ordinal");
    if (enc == "onehot") {
      c.encoding = ColumnSpec::Encoding::kOneHot;
    } else if (enc == "ordinal") {
      c.encoding = ColumnSpec::Encoding::kOrdinal;
    } else {
      throw ConfigError("unknown encoding '" + enc + "' for column " + c.name);
    }
    c.levels = StringList(j, "values");
    if (c.levels.empty()) {
      throw ConfigError("categorical column " + c.name + " must declare its values");
    }
  } else {
    throw ConfigError("unknown column type '" + type + "' for column " + c.name);
  }
  return c;
}

int LevelIndex(const ColumnSpec& c, const std::string& raw) {
  auto it = std::find(c.levels.begin(), c.levels.end(), raw);
  return it == c.levels.end() ? -1 : static_cast<int>(it - c.levels.begin());
}

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

Schema Schema::from_json(const json& j) {
  try {
    Schema s;
    for (const json& f : j.at("features")) s.features.push_back(ParseColumn(f));
    const json& sens = j.at("sensitive");
    s.sensitive_column = sens.at("column").get<std::string>();
    s.privileged_values = StringList(sens, "privileged");
    s.protected_values = StringList(sens, "protected");
    const json& lab = j.at("label");
    s.label_column = lab.at("column").get<std::string>();
    s.positive_values = StringList(lab, "positive");
    s.negative_values = StringList(lab, "negative");
    s.sensitive_as_feature = j.value("sensitive_as_feature", true);
    if (j.contains("attributes")) {
      for (const json& a : j.at("attributes")) {
        ColumnSpec c = ParseColumn(a);
        if (c.kind != ColumnSpec::Kind::kCategorical) {
          throw ConfigError("attribute " + c.name + " must be categorical");
        }
        s.attributes.push_back(std::move(c));
      }
    }
    s.na_values = StringList(j, "na_values");
    if (s.privileged_values.empty() || s.protected_values.empty()) {
      throw ConfigError("schema must declare privileged and protected values");
    }
    if (s.positive_values.empty() || s.negative_values.empty()) {
      throw ConfigError("schema must declare positive and negative label values");
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("schema file " + path.string() + ": " + e.what());
  }
  return Schema::from_json(j);
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("data file is empty: " + path.string());
  const std::vector<std::string> header = SplitCsvLine(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
  auto column_of = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  };

  Dataset::Columns c;
  c.sensitive_name = schema.sensitive_column;
  c.label_name = schema.label_column;
  std::vector<std::size_t> feature_cols;
  bool sensitive_listed = false;
  for (const ColumnSpec& f : schema.features) {
    feature_cols.push_back(column_of(f.name));
    if (f.name == schema.sensitive_column) {
      sensitive_listed = true;
      c.sensitive_feature = c.feature_names.size();
    }
    if (f.kind == ColumnSpec::Kind::kCategorical &&
        f.encoding == ColumnSpec::Encoding::kOneHot) {
      for (const std::string& level : f.levels) c.feature_names.push_back(f.name + "=" + level);
    } else {
      c.feature_names.push_back(f.name);
    }
  }
  const bool append_sensitive = schema.sensitive_as_feature && !sensitive_listed;
  if (append_sensitive) {
    c.sensitive_feature = c.feature_names.size();
    c.feature_names.push_back(schema.sensitive_column);
  }
  const std::size_t sens_col = column_of(schema.sensitive_column);
  const std::size_t label_col = column_of(schema.label_column);
  std::vector<std::size_t> attr_cols;
  for (const ColumnSpec& a : schema.attributes) {
    attr_cols.push_back(column_of(a.name));
    c.attributes.emplace(a.name, Attribute{a.levels, {}});
  }

  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    const std::size_t row_no = data_row++;
    if (Trim(line).empty()) continue;
    const std::vector<std::string> fields = SplitCsvLine(line);
    if (fields.size() != header.size()) {
      throw RowError(row_no, "expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(fields.size()));
    }
    if (!schema.na_values.empty()) {
      const bool skip = std::any_of(fields.begin(), fields.end(), [&](const std::string& f) {
        return Contains(schema.na_values, Trim(f));
      });
      if (skip) continue;
    }

    int s = -1;
    if (Contains(schema.privileged_values, fields[sens_col])) {
      s = kPrivileged;
    } else if (Contains(schema.protected_values, fields[sens_col])) {
      s = kProtected;
    } else {
      throw EncodingError("row " + std::to_string(row_no) + ": sensitive value '" +
                          fields[sens_col] + "' is neither privileged nor protected");
    }
    int y = -1;
    if (Contains(schema.positive_values, fields[label_col])) {
      y = 1;
    } else if (Contains(schema.negative_values, fields[label_col])) {
      y = 0;
    } else {
      throw EncodingError("row " + std::to_string(row_no) + ": label value '" +
                          fields[label_col] + "' is neither positive nor negative");
    }

    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      const ColumnSpec& spec = schema.features[f];
      const std::string& raw = fields[feature_cols[f]];
      if (spec.name == schema.sensitive_column) {
        c.features.push_back(static_cast<double>(s));
        continue;
      }
      if (spec.kind == ColumnSpec::Kind::kNumeric) {
        double v = 0.0;
        const char* end = raw.data() + raw.size();
        auto [ptr, ec] = std::from_chars(raw.data(), end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
          throw RowError(row_no, "column '" + spec.name + "': cannot parse '" + raw +
                                     "' as a number");
        }
        c.features.push_back(v);
        continue;
      }
      const int level = LevelIndex(spec, raw);
      if (level < 0) {
        throw RowError(row_no, "column '" + spec.name + "': undeclared category '" +
                                   raw + "'");
      }
      if (spec.encoding == ColumnSpec::Encoding::kOrdinal) {
        c.features.push_back(static_cast<double>(level));
      } else {
        for (std::size_t k = 0; k < spec.levels.size(); ++k) {
          c.features.push_back(static_cast<int>(k) == level ? 1.0 : 0.0);
        }
      }
    }
    if (append_sensitive) c.features.push_back(static_cast<double>(s));
    for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
      const int level = LevelIndex(schema.attributes[a], fields[attr_cols[a]]);
      if (level < 0) {
        throw RowError(row_no, "attribute '" + schema.attributes[a].name +
                                   "': undeclared category '" + fields[attr_cols[a]] + "'");
      }
      c.attributes[schema.attributes[a].name].codes.push_back(level);
    }
    c.labels.push_back(y);
    c.sensitive.push_back(s);
    c.ids.push_back(static_cast<std::int64_t>(row_no));
  }
  if (c.labels.empty()) throw DataError("data file has no rows: " + path.string());
  return Dataset(std::move(c));
}

}  // namespace fairacq

/*
 * Copyright (c) 2026, finalmlp-cpp contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "finalmlp/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "finalmlp/common.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

const char* to_string(FieldGroup g) {
  switch (g) {
    case FieldGroup::user: return "user";
    case FieldGroup::item: return "item";
    case FieldGroup::context: return "context";
    case FieldGroup::other: return "other";
  }
  return "other";
}

FieldGroup field_group_from_string(const std::string& s) {
  if (s == "user") return FieldGroup::user;
  if (s == "item") return FieldGroup::item;
  if (s == "context") return FieldGroup::context;
  if (s == "other") return FieldGroup::other;
  throw ConfigError("unknown field group '" + s + "' (expected user|item|context|other)");
}

std::size_t FeatureSchema::total_features() const {
  std::size_t total = 0;
  for (const auto& f : fields) total += f.size();
  return total;
}

std::vector<std::uint32_t> FeatureSchema::field_offsets() const {
  std::vector<std::uint32_t> offsets(fields.size() + 1, 0);
  for (std::size_t i = 0; i < fields.size(); ++i) offsets[i + 1] = offsets[i] + fields[i].size();
  return offsets;
}

std::vector<std::size_t> FeatureSchema::fields_in_group(FieldGroup g) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].group == g) idx.push_back(i);
  return idx;
}

std::size_t FeatureSchema::field_index(const std::string& name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == name) return i;
  throw ConfigError("unknown field '" + name + "'");
}

std::string FeatureSchema::to_json_string() const {
  nlohmann::ordered_json j;
  j["min_count"] = min_count;
  j["fields"] = nlohmann::ordered_json::array();
  for (const auto& f : fields) {
    nlohmann::ordered_json jf;
    jf["name"] = f.name;
    jf["group"] = to_string(f.group);
    jf["oov_id"] = f.oov_id;
    nlohmann::ordered_json vocab = nlohmann::ordered_json::object();
    for (const auto& [token, id] : f.vocab) vocab[token] = id;  // std::map: sorted, stable
    jf["vocab"] = std::move(vocab);
    j["fields"].push_back(std::move(jf));
  }
  return j.dump(2);
}

FeatureSchema FeatureSchema::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("schema: invalid JSON: ") + e.what());
  }
  FeatureSchema schema;
  schema.min_count = j.at("min_count").get<std::uint32_t>();
  for (const auto& jf : j.at("fields")) {
    FieldSchema f;
    f.name = jf.at("name").get<std::string>();
    f.group = field_group_from_string(jf.at("group").get<std::string>());
    f.oov_id = jf.at("oov_id").get<std::uint32_t>();
    for (const auto& [token, id] : jf.at("vocab").items())
      f.vocab[token] = id.get<std::uint32_t>();
    if (f.oov_id != f.vocab.size())
      throw IoError("schema: field '" + f.name + "' oov_id must equal vocab size");
    schema.fields.push_back(std::move(f));
  }
  if (schema.fields.empty()) throw IoError("schema: no fields");
  return schema;
}

void FeatureSchema::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open schema file for writing: " + path);
  out << to_json_string() << "\n";
  if (!out) throw IoError("failed writing schema file: " + path);
}

FeatureSchema FeatureSchema::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open schema file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

void EncodedDataset::append(const std::uint32_t* feature_ids, std::uint8_t label) {
  ids.insert(ids.end(), feature_ids, feature_ids + n_fields);
  labels.push_back(label);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

struct ColumnMap {
  std::vector<std::size_t> field_cols;  // column index per declared field
  std::size_t label_col = 0;
  bool has_label = false;
};

ColumnMap map_columns(const RawTable& raw, const std::vector<FieldDecl>& decls,
                      bool require_label) {
  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (!by_name.emplace(raw.header[c], c).second)
      throw DataError("duplicate column '" + raw.header[c] + "' in header");
  }
  ColumnMap map;
  for (const auto& decl : decls) {
    auto it = by_name.find(decl.name);
    if (it == by_name.end()) throw DataError("declared field '" + decl.name + "' not in header");
    map.field_cols.push_back(it->second);
  }
  auto it = by_name.find("label");
  if (it != by_name.end()) {
    map.label_col = it->second;
    map.has_label = true;
  } else if (require_label) {
    throw DataError("input has no 'label' column");
  }
  const std::size_t expected = decls.size() + (map.has_label ? 1 : 0);
  if (raw.header.size() != expected)
    throw DataError("header has " + std::to_string(raw.header.size()) + " columns, expected " +
                    std::to_string(expected));
  return map;
}

}  // namespace

RawTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open data file: " + path);
  RawTable table;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty input: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_line(line);
  const std::size_t width = table.header.size();
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    ++row_index;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != width)
      throw DataError("row " + std::to_string(row_index) + ": has " +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(width));
    table.rows.push_back(std::move(cells));
  }
  if (table.rows.empty()) throw DataError("no data rows in " + path);
  return table;
}

FeatureSchema build_schema(const RawTable& raw, const std::vector<FieldDecl>& decls,
                           std::uint32_t min_count) {
  if (decls.empty()) throw ConfigError("no fields declared");
  if (raw.rows.empty()) throw DataError("no data rows");
  const ColumnMap map = map_columns(raw, decls, true);

  FeatureSchema schema;
  schema.min_count = min_count;
  for (std::size_t i = 0; i < decls.size(); ++i) {
    std::map<std::string, std::uint32_t> counts;
    for (const auto& row : raw.rows) ++counts[row[map.field_cols[i]]];
    FieldSchema field;
    field.name = decls[i].name;
    field.group = decls[i].group;
    std::uint32_t next_id = 0;
    for (const auto& [token, count] : counts)  // lexicographic via std::map
      if (count >= min_count) field.vocab.emplace(token, next_id++);
    field.oov_id = next_id;
    schema.fields.push_back(std::move(field));
  }
  return schema;
}

EncodedDataset encode(const RawTable& raw, const FeatureSchema& schema, bool require_label) {
  std::vector<FieldDecl> decls;
  for (const auto& f : schema.fields) decls.push_back({f.name, f.group});
  const ColumnMap map = map_columns(raw, decls, require_label);

  EncodedDataset data;
  data.n_fields = schema.field_count();
  data.ids.reserve(raw.rows.size() * data.n_fields);
  data.labels.reserve(raw.rows.size());
  std::vector<std::uint32_t> encoded(data.n_fields);
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& row = raw.rows[r];
    for (std::size_t i = 0; i < data.n_fields; ++i) {
      const auto& field = schema.fields[i];
      auto it = field.vocab.find(row[map.field_cols[i]]);
      encoded[i] = it != field.vocab.end() ? it->second : field.oov_id;
    }
    std::uint8_t y = 0;
    if (map.has_label) {
      const std::string& label = row[map.label_col];
      if (label != "0" && label != "1")
        throw DataError("row " + std::to_string(r + 1) + ": label '" + label + "' is not 0 or 1");
      y = label == "1" ? 1 : 0;
    }
    data.append(encoded.data(), y);
  }
  return data;
}

std::array<std::vector<std::uint32_t>, 3> split_indices(std::size_t n, const SplitSpec& spec) {
  for (double frac : {spec.train, spec.valid, spec.test})
    if (!(frac > 0.0 && frac < 1.0))
      throw ConfigError("split fractions must each lie in (0,1)");
  if (std::abs(spec.train + spec.valid + spec.test - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");

  const std::size_t n_valid = static_cast<std::size_t>(n * spec.valid);
  const std::size_t n_test = static_cast<std::size_t>(n * spec.test);
  if (n_valid == 0 || n_test == 0 || n_valid + n_test >= n)
    throw DataError("split would produce an empty part (n=" + std::to_string(n) + ")");
  const std::size_t n_train = n - n_valid - n_test;

  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(mix_seed(spec.seed, "split"));
  rng.shuffle(order);

  std::array<std::vector<std::uint32_t>, 3> parts;
  const std::size_t bounds[4] = {0, n_train, n_train + n_valid, n};
  for (std::size_t p = 0; p < 3; ++p)
    parts[p].assign(order.begin() + bounds[p], order.begin() + bounds[p + 1]);
  return parts;
}

std::array<EncodedDataset, 3> split(const EncodedDataset& data, const SplitSpec& spec) {
  const auto idx = split_indices(data.n(), spec);
  std::array<EncodedDataset, 3> parts;
  for (std::size_t p = 0; p < 3; ++p) {
    parts[p].n_fields = data.n_fields;
    parts[p].ids.reserve(idx[p].size() * data.n_fields);
    for (std::uint32_t i : idx[p]) parts[p].append(data.row(i), data.labels[i]);
  }
  return parts;
}

BatchStream::BatchStream(const EncodedDataset& data, std::size_t batch_size,
                         std::uint64_t shuffle_seed, std::uint64_t epoch)
    : data_(data), batch_size_(batch_size) {
  if (batch_size_ == 0) throw ConfigError("batch_size must be >= 1");
  order_.resize(data.n());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
  Rng rng(mix_seed(shuffle_seed, splitmix64(epoch)));
  rng.shuffle(order_);
}

std::size_t BatchStream::n_batches() const {
  return (data_.n() + batch_size_ - 1) / batch_size_;
}

bool BatchStream::next(Batch& out) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t take = std::min(batch_size_, order_.size() - cursor_);
  out.ids = IdMatrix(take, data_.n_fields);
  out.labels.resize(take);
  for (std::size_t b = 0; b < take; ++b) {
    const std::uint32_t src = order_[cursor_ + b];
    const std::uint32_t* row = data_.row(src);
    std::copy(row, row + data_.n_fields, out.ids.v.begin() + b * data_.n_fields);
    out.labels[b] = data_.labels[src];
  }
  cursor_ += take;
  return true;
}

}  // namespace finalmlp

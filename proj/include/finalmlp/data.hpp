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

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finalmlp/matrix.hpp"

namespace finalmlp {

enum class FieldGroup { user, item, context, other };

const char* to_string(FieldGroup g);
FieldGroup field_group_from_string(const std::string& s);

/// Declaration of one raw input column: its name and semantic group.
struct FieldDecl {
  std::string name;
  FieldGroup group = FieldGroup::other;
};

/// Vocabulary of one field. Ids are contiguous from 0; the OOV id is the
/// last id of the field, so the field spans vocab.size() + 1 ids.
struct FieldSchema {
  std::string name;
  FieldGroup group = FieldGroup::other;
  std::map<std::string, std::uint32_t> vocab;  // ordered: token -> id
  std::uint32_t oov_id = 0;

  std::uint32_t size() const { return static_cast<std::uint32_t>(vocab.size()) + 1; }
};

/// Ordered field metadata for a dataset. Immutable after construction.
struct FeatureSchema {
  std::vector<FieldSchema> fields;
  std::uint32_t min_count = 1;

  std::size_t field_count() const { return fields.size(); }
  std::size_t total_features() const;
  /// Global row offsets per field, with one extra entry holding the total.
  std::vector<std::uint32_t> field_offsets() const;
  std::vector<std::size_t> fields_in_group(FieldGroup g) const;
  std::size_t field_index(const std::string& name) const;  // throws ConfigError if unknown

  void save(const std::string& path) const;
  static FeatureSchema load(const std::string& path);
  std::string to_json_string() const;
  static FeatureSchema from_json_string(const std::string& text);
};

/// Integer-encoded instances with binary labels. Row-major ids, one row per
/// instance, one column per field (ids are field-local).
struct EncodedDataset {
  std::size_t n_fields = 0;
  std::vector<std::uint32_t> ids;    // n() * n_fields
  std::vector<std::uint8_t> labels;  // exactly 0 or 1

  std::size_t n() const { return labels.size(); }
  const std::uint32_t* row(std::size_t i) const { return ids.data() + i * n_fields; }
  void append(const std::uint32_t* feature_ids, std::uint8_t label);
};

/// Train/valid/test fractions plus the seed controlling assignment.
struct SplitSpec {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
};

/// In-memory raw table: header + string cells, as read from delimited text.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads comma-separated UTF-8 text with a header line. No quoting; cells
/// must not contain commas. Throws DataError with the 1-based row index on
/// malformed rows, and on empty input.
RawTable read_csv(const std::string& path);

/// Builds per-field vocabularies from raw rows. Tokens seen at least
/// min_count times get ids in lexicographic token order; rarer tokens fall
/// to the OOV id. The label column is located by name "label" and ignored
/// here. Deterministic.
FeatureSchema build_schema(const RawTable& raw, const std::vector<FieldDecl>& decls,
                           std::uint32_t min_count);

/// Encodes raw rows against a schema: unknown tokens map to the field OOV id,
/// instance order is preserved, labels must be exactly "0" or "1". With
/// require_label false a label-less table encodes with all labels 0 (scoring
/// input).
EncodedDataset encode(const RawTable& raw, const FeatureSchema& schema,
                      bool require_label = true);

/// The shuffled index partition behind split(): train, valid, test.
std::array<std::vector<std::uint32_t>, 3> split_indices(std::size_t n, const SplitSpec& spec);

/// Deterministic disjoint partition. Valid and test sizes are floored, the
/// remainder goes to train. Throws DataError if any part would be empty.
std::array<EncodedDataset, 3> split(const EncodedDataset& data, const SplitSpec& spec);

/// One mini-batch: ids are batch x fields, labels parallel to rows.
struct Batch {
  IdMatrix ids;
  std::vector<double> labels;
};

/// Deterministic shuffled mini-batches. The permutation is a pure function
/// of (shuffle_seed, epoch); every instance appears exactly once per epoch
/// and the last batch may be smaller.
class BatchStream {
 public:
  BatchStream(const EncodedDataset& data, std::size_t batch_size, std::uint64_t shuffle_seed,
              std::uint64_t epoch);

  /// Fills `out`; returns false when the epoch is exhausted.
  bool next(Batch& out);
  std::size_t n_batches() const;

 private:
  const EncodedDataset& data_;
  std::size_t batch_size_;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace finalmlp

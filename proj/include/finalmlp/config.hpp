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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finalmlp/data.hpp"
#include "finalmlp/model.hpp"
#include "finalmlp/synthetic.hpp"
#include "finalmlp/trainer.hpp"

namespace finalmlp {

/// Where instances come from: a delimited text file or the bundled
/// generator. Exactly one of the two.
struct DataConfig {
  std::string path;
  bool use_synthetic = false;
  SyntheticSpec synthetic;
  SplitSpec split;
  std::uint32_t min_count = 1;
  /// Optional field-name -> group assignments for file data; unlisted
  /// fields fall into the `other` group.
  std::map<std::string, FieldGroup> groups;
};

struct AblateConfig {
  std::vector<Variant> variants;
  std::vector<std::size_t> heads{1};
  std::vector<std::uint64_t> seeds{1};
};

/// The whole declarative run description. Parsing is strict: unknown keys
/// anywhere are rejected, and every value is validated before any model
/// state is allocated.
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  AblateConfig ablate;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON for a parsed config; stable key order, suitable for
/// embedding into model containers and re-parsing.
std::string run_config_to_json(const RunConfig& cfg);

std::string read_text_file(const std::string& path);
/// Atomic write: temp file in the same directory, then rename.
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace finalmlp

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

#include <memory>
#include <string>

#include "finalmlp/config.hpp"
#include "finalmlp/data.hpp"
#include "finalmlp/model.hpp"

namespace finalmlp {

/// Model file layout, version 1:
///   line   "FINALMLP-MODEL v1"
///   line   decimal byte length of the JSON block
///   bytes  JSON: format_version, feature schema, run config, training
///          summary, tensor manifest (name/rows/cols in registry order)
///   bytes  tensor payloads: raw little-endian doubles, row-major,
///          concatenated in manifest order
/// Round-trip loading reproduces bit-identical eval predictions. The write
/// goes through a temp file plus rename, so readers never see a torn file.
struct LoadedModel {
  FeatureSchema schema;
  RunConfig config;
  std::string summary_json;
  std::unique_ptr<Model> model;
};

void save_model(const std::string& path, Model& model, const FeatureSchema& schema,
                const RunConfig& config, const std::string& summary_json);

LoadedModel load_model(const std::string& path);

}  // namespace finalmlp

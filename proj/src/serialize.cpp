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

#include "finalmlp/serialize.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "finalmlp/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "model containers are little-endian; big-endian hosts need byte swaps");

namespace finalmlp {

namespace {

constexpr const char* kMagic = "FINALMLP-MODEL v1";

using ordered_json = nlohmann::ordered_json;

}  // namespace

void save_model(const std::string& path, Model& model, const FeatureSchema& schema,
                const RunConfig& config, const std::string& summary_json) {
  const std::vector<Param*> params = model.params();

  ordered_json j;
  j["format_version"] = 1;
  j["schema"] = ordered_json::parse(schema.to_json_string());
  j["config"] = ordered_json::parse(run_config_to_json(config));
  j["summary"] = summary_json.empty() ? ordered_json::object() : ordered_json::parse(summary_json);
  ordered_json manifest = ordered_json::array();
  for (const Param* p : params)
    manifest.push_back({{"name", p->name},
                        {"rows", p->value.rows()},
                        {"cols", p->value.cols()}});
  j["tensors"] = manifest;
  const std::string header = j.dump(2);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp + "' for writing");
    f << kMagic << "\n" << header.size() << "\n" << header;
    for (const Param* p : params)
      f.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!f.good()) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");

  std::string magic;
  if (!std::getline(f, magic)) throw IoError("'" + path + "': truncated header");
  if (magic != kMagic) {
    if (magic.rfind("FINALMLP-MODEL", 0) == 0)
      throw IoError("'" + path + "': unsupported model format version '" + magic + "'");
    throw IoError("'" + path + "': not a model container");
  }
  std::string len_line;
  if (!std::getline(f, len_line)) throw IoError("'" + path + "': truncated header");
  std::size_t header_len = 0;
  try {
    header_len = std::stoull(len_line);
  } catch (const std::exception&) {
    throw IoError("'" + path + "': malformed header length '" + len_line + "'");
  }
  std::string header(header_len, '\0');
  f.read(header.data(), static_cast<std::streamsize>(header_len));
  if (f.gcount() != static_cast<std::streamsize>(header_len))
    throw IoError("'" + path + "': truncated JSON block");

  ordered_json j;
  try {
    j = ordered_json::parse(header);
  } catch (const std::exception& e) {
    throw IoError("'" + path + "': corrupt JSON block: " + std::string(e.what()));
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw IoError("'" + path + "': unsupported format_version");

  LoadedModel out;
  out.schema = FeatureSchema::from_json_string(j["schema"].dump());
  out.config = parse_run_config(j["config"].dump());
  out.summary_json = j.contains("summary") ? j["summary"].dump(2) : "{}";
  out.model = std::make_unique<Model>(out.config.model, out.schema);

  const std::vector<Param*> params = out.model->params();
  const ordered_json& manifest = j["tensors"];
  if (!manifest.is_array() || manifest.size() != params.size())
    throw IoError("'" + path + "': tensor manifest does not match the configured model (" +
                  std::to_string(manifest.size()) + " vs " + std::to_string(params.size()) +
                  " tensors)");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ordered_json& m = manifest[i];
    const std::string name = m.at("name").get<std::string>();
    const std::size_t rows = m.at("rows").get<std::size_t>();
    const std::size_t cols = m.at("cols").get<std::size_t>();
    if (name != params[i]->name || rows != params[i]->value.rows() ||
        cols != params[i]->value.cols())
      throw IoError("'" + path + "': tensor " + std::to_string(i) + " is '" + name + "' " +
                    std::to_string(rows) + "x" + std::to_string(cols) + ", expected '" +
                    params[i]->name + "' " + std::to_string(params[i]->value.rows()) + "x" +
                    std::to_string(params[i]->value.cols()));
    f.read(reinterpret_cast<char*>(params[i]->value.data()),
           static_cast<std::streamsize>(params[i]->value.size() * sizeof(double)));
    if (f.gcount() != static_cast<std::streamsize>(params[i]->value.size() * sizeof(double)))
      throw IoError("'" + path + "': truncated payload for tensor '" + name + "'");
  }
  return out;
}

}  // namespace finalmlp

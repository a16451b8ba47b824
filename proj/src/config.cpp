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

#include "finalmlp/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "finalmlp/common.hpp"

namespace finalmlp {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw ConfigError("config: " + where + ": " + msg);
}

void check_keys(const ordered_json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad(where, "unknown key '" + item.key() + "'");
  }
}

const ordered_json* find(const ordered_json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const ordered_json& obj, const std::string& where, const char* key,
                  double def) {
  const ordered_json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number()) bad(where + "." + key, "expected a number");
  return v->get<double>();
}

std::uint64_t get_uint(const ordered_json& obj, const std::string& where, const char* key,
                       std::uint64_t def) {
  const ordered_json* v = find(obj, key);
  if (!v) return def;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v->get<std::int64_t>());
  bad(where + "." + key, "expected a non-negative integer");
}

std::string get_string(const ordered_json& obj, const std::string& where, const char* key,
                       const std::string& def) {
  const ordered_json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_string()) bad(where + "." + key, "expected a string");
  return v->get<std::string>();
}

std::vector<std::size_t> get_size_array(const ordered_json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) bad(where, "expected a non-empty array of positive integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() && !e.is_number_unsigned())
      bad(where, "expected integers");
    const std::int64_t n = e.get<std::int64_t>();
    if (n < 1) bad(where, "entries must be >= 1");
    out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

SyntheticSpec parse_synthetic(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"n", "fields", "vocab_per_field", "latent_dim", "latent_scale", "seed"});
  SyntheticSpec s;
  s.n = get_uint(j, where, "n", s.n);
  s.n_fields = get_uint(j, where, "fields", s.n_fields);
  s.vocab_per_field = get_uint(j, where, "vocab_per_field", s.vocab_per_field);
  s.latent_dim = get_uint(j, where, "latent_dim", s.latent_dim);
  s.latent_scale = get_number(j, where, "latent_scale", s.latent_scale);
  s.seed = get_uint(j, where, "seed", s.seed);
  if (s.n == 0) bad(where + ".n", "must be positive");
  if (s.n_fields < 2) bad(where + ".fields", "need at least 2 fields");
  if (s.vocab_per_field == 0) bad(where + ".vocab_per_field", "must be positive");
  if (s.latent_dim == 0) bad(where + ".latent_dim", "must be positive");
  if (!(s.latent_scale > 0.0)) bad(where + ".latent_scale", "must be positive");
  return s;
}

SplitSpec parse_split(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"train", "valid", "test", "seed"});
  SplitSpec s;
  s.train = get_number(j, where, "train", s.train);
  s.valid = get_number(j, where, "valid", s.valid);
  s.test = get_number(j, where, "test", s.test);
  s.seed = get_uint(j, where, "seed", s.seed);
  for (double f : {s.train, s.valid, s.test})
    if (!(f > 0.0 && f < 1.0)) bad(where, "fractions must lie in (0, 1)");
  if (std::fabs(s.train + s.valid + s.test - 1.0) > 1e-9)
    bad(where, "fractions must sum to 1");
  return s;
}

DataConfig parse_data(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"path", "synthetic", "split", "min_count", "groups"});
  DataConfig d;
  d.path = get_string(j, where, "path", "");
  if (const ordered_json* syn = find(j, "synthetic")) {
    if (!syn->is_object()) bad(where + ".synthetic", "expected an object");
    d.use_synthetic = true;
    d.synthetic = parse_synthetic(*syn, where + ".synthetic");
  }
  if (d.path.empty() && !d.use_synthetic)
    bad(where, "either 'path' or 'synthetic' is required");
  if (!d.path.empty() && d.use_synthetic)
    bad(where, "'path' and 'synthetic' are mutually exclusive");
  if (const ordered_json* sp = find(j, "split")) {
    if (!sp->is_object()) bad(where + ".split", "expected an object");
    d.split = parse_split(*sp, where + ".split");
  }
  const std::uint64_t mc = get_uint(j, where, "min_count", 1);
  if (mc == 0) bad(where + ".min_count", "must be >= 1");
  d.min_count = static_cast<std::uint32_t>(mc);
  if (const ordered_json* g = find(j, "groups")) {
    if (!g->is_object()) bad(where + ".groups", "expected an object of field -> group");
    for (const auto& item : g->items()) {
      if (!item.value().is_string()) bad(where + ".groups." + item.key(), "expected a string");
      try {
        d.groups[item.key()] = field_group_from_string(item.value().get<std::string>());
      } catch (const Error& e) {
        bad(where + ".groups." + item.key(), e.what());
      }
    }
  }
  return d;
}

StreamSpec parse_stream(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"widths", "dropout"});
  StreamSpec s;
  if (const ordered_json* w = find(j, "widths")) s.widths = get_size_array(*w, where + ".widths");
  s.dropout = get_number(j, where, "dropout", 0.0);
  if (s.dropout < 0.0 || s.dropout >= 1.0) bad(where + ".dropout", "must lie in [0, 1)");
  return s;
}

GateConfig parse_gate(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"condition", "hidden"});
  GateConfig g;
  if (const ordered_json* c = find(j, "condition")) {
    if (c->is_string()) {
      const std::string s = c->get<std::string>();
      if (s == "learned") {
        g.kind = GateConditionKind::learned_vector;
      } else if (s.rfind("group:", 0) == 0) {
        g.kind = GateConditionKind::field_group;
        try {
          g.group = field_group_from_string(s.substr(6));
        } catch (const Error& e) {
          bad(where + ".condition", e.what());
        }
      } else {
        bad(where + ".condition",
            "expected 'learned', 'group:<user|item|context>', or an array of field names");
      }
    } else if (c->is_array()) {
      g.kind = GateConditionKind::field_list;
      for (const auto& e : *c) {
        if (!e.is_string()) bad(where + ".condition", "field names must be strings");
        g.field_names.push_back(e.get<std::string>());
      }
      if (g.field_names.empty()) bad(where + ".condition", "field list must be non-empty");
    } else {
      bad(where + ".condition", "expected a string or an array");
    }
  }
  if (const ordered_json* h = find(j, "hidden"))
    g.hidden = get_size_array(*h, where + ".hidden");
  return g;
}

FusionSpec parse_fusion(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"kind", "heads"});
  FusionSpec f{FusionKind::bilinear, 1};
  const std::string kind = get_string(j, where, "kind", "bilinear");
  try {
    f.kind = fusion_kind_from_string(kind);
  } catch (const Error& e) {
    bad(where + ".kind", e.what());
  }
  const std::uint64_t heads = get_uint(j, where, "heads", 1);
  if (heads == 0) bad(where + ".heads", "must be >= 1");
  f.heads = static_cast<std::size_t>(heads);
  return f;
}

ModelConfig parse_model(const ordered_json& j, const std::string& where) {
  check_keys(j, where,
             {"variant", "embed_dim", "stream1", "stream2", "feature_selection", "fusion"});
  ModelConfig m;
  const std::string v = get_string(j, where, "variant", "FinalMLP");
  try {
    m.variant = variant_from_string(v);
  } catch (const Error& e) {
    bad(where + ".variant", e.what());
  }
  const std::uint64_t dim = get_uint(j, where, "embed_dim", 10);
  if (dim == 0) bad(where + ".embed_dim", "must be >= 1");
  m.embed_dim = static_cast<std::size_t>(dim);
  if (const ordered_json* s1 = find(j, "stream1")) {
    if (!s1->is_object()) bad(where + ".stream1", "expected an object");
    m.stream1 = parse_stream(*s1, where + ".stream1");
  }
  if (const ordered_json* s2 = find(j, "stream2")) {
    if (!s2->is_object()) bad(where + ".stream2", "expected an object");
    m.stream2 = parse_stream(*s2, where + ".stream2");
  }
  if (const ordered_json* fs = find(j, "feature_selection")) {
    if (!fs->is_object()) bad(where + ".feature_selection", "expected an object");
    check_keys(*fs, where + ".feature_selection", {"stream1", "stream2"});
    if (const ordered_json* g1 = find(*fs, "stream1")) {
      if (!g1->is_object()) bad(where + ".feature_selection.stream1", "expected an object");
      m.gate1 = parse_gate(*g1, where + ".feature_selection.stream1");
    }
    if (const ordered_json* g2 = find(*fs, "stream2")) {
      if (!g2->is_object()) bad(where + ".feature_selection.stream2", "expected an object");
      m.gate2 = parse_gate(*g2, where + ".feature_selection.stream2");
    }
  }
  if (const ordered_json* f = find(j, "fusion")) {
    if (!f->is_object()) bad(where + ".fusion", "expected an object");
    m.fusion = parse_fusion(*f, where + ".fusion");
  }

  // Cross-field consistency, so bad combinations never reach model state.
  if (m.variant != Variant::MLP) {
    const std::size_t d1 = m.stream1.widths.back();
    const std::size_t d2 = m.stream2.widths.back();
    const FusionSpec eff = effective_fusion(m);
    if (eff.kind == FusionKind::bilinear && (d1 % eff.heads != 0 || d2 % eff.heads != 0))
      bad(where + ".fusion.heads", "heads=" + std::to_string(eff.heads) +
                                       " must divide both stream output widths (" +
                                       std::to_string(d1) + ", " + std::to_string(d2) + ")");
    if ((eff.kind == FusionKind::sum || eff.kind == FusionKind::ewp) && d1 != d2)
      bad(where, std::string(to_string(eff.kind)) +
                     " fusion requires equal stream output widths, got " + std::to_string(d1) +
                     " and " + std::to_string(d2));
  }
  return m;
}

TrainConfig parse_train(const ordered_json& j, const std::string& where) {
  check_keys(j, where,
             {"lr", "beta1", "beta2", "epsilon", "embedding_l2", "batch_size", "max_epochs",
              "patience"});
  TrainConfig t;
  t.lr = get_number(j, where, "lr", t.lr);
  t.beta1 = get_number(j, where, "beta1", t.beta1);
  t.beta2 = get_number(j, where, "beta2", t.beta2);
  t.epsilon = get_number(j, where, "epsilon", t.epsilon);
  t.embedding_l2 = get_number(j, where, "embedding_l2", t.embedding_l2);
  t.batch_size = get_uint(j, where, "batch_size", t.batch_size);
  t.max_epochs = get_uint(j, where, "max_epochs", t.max_epochs);
  t.patience = get_uint(j, where, "patience", t.patience);
  if (!(t.lr > 0.0)) bad(where + ".lr", "must be positive");
  if (t.beta1 < 0.0 || t.beta1 >= 1.0) bad(where + ".beta1", "must lie in [0, 1)");
  if (t.beta2 < 0.0 || t.beta2 >= 1.0) bad(where + ".beta2", "must lie in [0, 1)");
  if (!(t.epsilon > 0.0)) bad(where + ".epsilon", "must be positive");
  if (t.embedding_l2 < 0.0) bad(where + ".embedding_l2", "must be >= 0");
  if (t.batch_size == 0) bad(where + ".batch_size", "must be >= 1");
  if (t.max_epochs == 0) bad(where + ".max_epochs", "must be >= 1");
  return t;
}

AblateConfig parse_ablate(const ordered_json& j, const std::string& where) {
  check_keys(j, where, {"variants", "heads", "seeds"});
  AblateConfig a;
  if (const ordered_json* v = find(j, "variants")) {
    if (!v->is_array() || v->empty()) bad(where + ".variants", "expected a non-empty array");
    for (const auto& e : *v) {
      if (!e.is_string()) bad(where + ".variants", "variant names must be strings");
      try {
        a.variants.push_back(variant_from_string(e.get<std::string>()));
      } catch (const Error& err) {
        bad(where + ".variants", err.what());
      }
    }
  }
  if (const ordered_json* h = find(j, "heads")) {
    a.heads = get_size_array(*h, where + ".heads");
  }
  if (const ordered_json* s = find(j, "seeds")) {
    if (!s->is_array() || s->empty()) bad(where + ".seeds", "expected a non-empty array");
    a.seeds.clear();
    for (const auto& e : *s) {
      if (!e.is_number_integer() && !e.is_number_unsigned())
        bad(where + ".seeds", "seeds must be integers");
      const std::int64_t n = e.get<std::int64_t>();
      if (n < 0) bad(where + ".seeds", "seeds must be >= 0");
      a.seeds.push_back(static_cast<std::uint64_t>(n));
    }
  }
  return a;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j, "top level", {"data", "model", "train", "seed", "out_dir", "ablate"});

  RunConfig rc;
  const ordered_json* data = find(j, "data");
  if (!data) throw ConfigError("config: 'data' section is required");
  if (!data->is_object()) bad("data", "expected an object");
  rc.data = parse_data(*data, "data");

  if (const ordered_json* m = find(j, "model")) {
    if (!m->is_object()) bad("model", "expected an object");
    rc.model = parse_model(*m, "model");
  }
  if (const ordered_json* t = find(j, "train")) {
    if (!t->is_object()) bad("train", "expected an object");
    rc.train = parse_train(*t, "train");
  }
  rc.seed = get_uint(j, "top level", "seed", 1);
  rc.out_dir = get_string(j, "top level", "out_dir", ".");
  if (const ordered_json* a = find(j, "ablate")) {
    if (!a->is_object()) bad("ablate", "expected an object");
    rc.ablate = parse_ablate(*a, "ablate");
  }
  rc.model.seed = rc.seed;
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

namespace {

ordered_json gate_to_json(const GateConfig& g) {
  ordered_json j;
  switch (g.kind) {
    case GateConditionKind::learned_vector:
      j["condition"] = "learned";
      break;
    case GateConditionKind::field_group:
      j["condition"] = std::string("group:") + to_string(g.group);
      break;
    case GateConditionKind::field_list:
      j["condition"] = g.field_names;
      break;
  }
  if (!g.hidden.empty()) j["hidden"] = g.hidden;
  return j;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json j;
  ordered_json data;
  if (cfg.data.use_synthetic) {
    const SyntheticSpec& s = cfg.data.synthetic;
    data["synthetic"] = {{"n", s.n},
                         {"fields", s.n_fields},
                         {"vocab_per_field", s.vocab_per_field},
                         {"latent_dim", s.latent_dim},
                         {"latent_scale", s.latent_scale},
                         {"seed", s.seed}};
  } else {
    data["path"] = cfg.data.path;
  }
  data["split"] = {{"train", cfg.data.split.train},
                   {"valid", cfg.data.split.valid},
                   {"test", cfg.data.split.test},
                   {"seed", cfg.data.split.seed}};
  data["min_count"] = cfg.data.min_count;
  if (!cfg.data.groups.empty()) {
    ordered_json g;
    for (const auto& [name, group] : cfg.data.groups) g[name] = to_string(group);
    data["groups"] = g;
  }
  j["data"] = data;

  ordered_json model;
  model["variant"] = to_string(cfg.model.variant);
  model["embed_dim"] = cfg.model.embed_dim;
  model["stream1"] = {{"widths", cfg.model.stream1.widths}, {"dropout", cfg.model.stream1.dropout}};
  model["stream2"] = {{"widths", cfg.model.stream2.widths}, {"dropout", cfg.model.stream2.dropout}};
  model["feature_selection"] = {{"stream1", gate_to_json(cfg.model.gate1)},
                                {"stream2", gate_to_json(cfg.model.gate2)}};
  model["fusion"] = {{"kind", to_string(cfg.model.fusion.kind)}, {"heads", cfg.model.fusion.heads}};
  j["model"] = model;

  j["train"] = {{"lr", cfg.train.lr},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"epsilon", cfg.train.epsilon},
                {"embedding_l2", cfg.train.embedding_l2},
                {"batch_size", cfg.train.batch_size},
                {"max_epochs", cfg.train.max_epochs},
                {"patience", cfg.train.patience}};
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  if (!cfg.ablate.variants.empty()) {
    ordered_json a;
    ordered_json variants = ordered_json::array();
    for (Variant v : cfg.ablate.variants) variants.push_back(to_string(v));
    a["variants"] = variants;
    a["heads"] = cfg.ablate.heads;
    a["seeds"] = cfg.ablate.seeds;
    j["ablate"] = a;
  }
  return j.dump(2);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed for '" + path + "'");
  return ss.str();
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f.good()) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

}  // namespace finalmlp

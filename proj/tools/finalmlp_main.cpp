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

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "finalmlp/common.hpp"
#include "finalmlp/config.hpp"
#include "finalmlp/data.hpp"
#include "finalmlp/gradcheck.hpp"
#include "finalmlp/loss.hpp"
#include "finalmlp/metrics.hpp"
#include "finalmlp/model.hpp"
#include "finalmlp/rng.hpp"
#include "finalmlp/serialize.hpp"
#include "finalmlp/synthetic.hpp"
#include "finalmlp/trainer.hpp"

namespace fs = std::filesystem;
using namespace finalmlp;

namespace {

// FINALMLP_LOG=quiet silences progress lines; anything else keeps them.
bool verbose() {
  const char* v = std::getenv("FINALMLP_LOG");
  return v == nullptr || std::string(v) != "quiet";
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string pct(double auc) { return fmt("%.2f", auc * 100.0); }

struct PreparedData {
  RawTable raw;
  FeatureSchema schema;
  std::array<EncodedDataset, 3> parts;  // train, valid, test
  std::array<std::vector<std::uint32_t>, 3> idx;
};

/// Materializes the configured dataset: the generator output goes through
/// the same text pipeline as file data, so both paths share one code path
/// from raw rows onward.
PreparedData prepare_data(const RunConfig& rc, const std::string& scratch_dir) {
  std::string path = rc.data.path;
  if (rc.data.use_synthetic) {
    path = (fs::path(scratch_dir) / "synthetic.csv").string();
    write_synthetic_csv(path, rc.data.synthetic);
  }
  PreparedData out;
  out.raw = read_csv(path);

  std::vector<FieldDecl> decls;
  std::size_t field_idx = 0;
  for (const std::string& col : out.raw.header) {
    if (col == "label") continue;
    FieldDecl d;
    d.name = col;
    const auto it = rc.data.groups.find(col);
    if (it != rc.data.groups.end())
      d.group = it->second;
    else if (rc.data.use_synthetic)
      d.group = synthetic_field_group(field_idx);
    decls.push_back(std::move(d));
    ++field_idx;
  }

  out.schema = build_schema(out.raw, decls, rc.data.min_count);
  const EncodedDataset all = encode(out.raw, out.schema);
  out.idx = split_indices(all.n(), rc.data.split);
  for (std::size_t p = 0; p < 3; ++p) {
    out.parts[p].n_fields = all.n_fields;
    for (std::uint32_t i : out.idx[p]) out.parts[p].append(all.row(i), all.labels[i]);
  }
  return out;
}

void write_raw_subset(const std::string& path, const RawTable& raw,
                      const std::vector<std::uint32_t>& indices) {
  std::ostringstream ss;
  for (std::size_t c = 0; c < raw.header.size(); ++c)
    ss << raw.header[c] << (c + 1 < raw.header.size() ? ',' : '\n');
  for (std::uint32_t i : indices) {
    const auto& row = raw.rows[i];
    for (std::size_t c = 0; c < row.size(); ++c)
      ss << row[c] << (c + 1 < row.size() ? ',' : '\n');
  }
  write_text_file_atomic(path, ss.str());
}

std::string metrics_csv_row(const EpochRow& r) {
  std::ostringstream ss;
  ss << r.epoch << ',' << fmt("%.17g", r.train_loss) << ',' << fmt("%.17g", r.val_auc) << ','
     << fmt("%.17g", r.val_logloss) << ',' << fmt("%.6f", r.wall_time) << '\n';
  return ss.str();
}

std::string summary_json(const Model& model, const TrainResult& res, const EvalReport& test) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(model.config().variant);
  j["best_epoch"] = res.best_epoch;
  j["best_val_auc"] = res.best_val_auc;
  j["test_auc"] = test.auc;
  j["test_logloss"] = test.logloss;
  j["n_parameters"] = test.n_parameters;
  return j.dump(2);
}

struct TrainedRun {
  TrainResult result;
  EvalReport test;
};

TrainedRun run_training(Model& model, const PreparedData& data, const RunConfig& rc,
                        std::uint64_t seed, std::ostream* metrics, const std::string& tag) {
  if (metrics) *metrics << "epoch,train_loss,val_auc,val_logloss,wall_time\n" << std::flush;
  const auto on_epoch = [&](const EpochRow& r) {
    if (metrics) *metrics << metrics_csv_row(r) << std::flush;
    if (verbose())
      std::cout << tag << "epoch " << r.epoch << "/" << rc.train.max_epochs << "  train_loss "
                << fmt("%.4f", r.train_loss) << "  val_auc " << pct(r.val_auc)
                << "  val_logloss " << fmt("%.4f", r.val_logloss) << "  ("
                << fmt("%.1f", r.wall_time) << "s)\n";
  };
  TrainedRun out;
  out.result = train(model, data.parts[0], data.parts[1], rc.train, seed, on_epoch);
  out.test = evaluate(model, data.parts[2], rc.train.batch_size);
  return out;
}

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool out_dir_set = false;
  bool data_set = false;
};

RunConfig load_with_overrides(const CommonArgs& a) {
  RunConfig rc = load_run_config(a.config_path);
  if (a.seed_set) {
    rc.seed = a.seed;
    rc.model.seed = a.seed;
  }
  if (a.out_dir_set) rc.out_dir = a.out_dir;
  if (a.data_set) {
    rc.data.path = a.data_path;
    rc.data.use_synthetic = false;
  }
  return rc;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig rc = load_with_overrides(args);
  fs::create_directories(rc.out_dir);
  const PreparedData data = prepare_data(rc, rc.out_dir);
  write_raw_subset((fs::path(rc.out_dir) / "test.csv").string(), data.raw, data.idx[2]);

  Model model(rc.model, data.schema);
  if (verbose())
    std::cout << "training " << to_string(rc.model.variant) << " (" << model.n_params()
              << " parameters) on " << data.parts[0].n() << " instances\n";

  const std::string metrics_path = (fs::path(rc.out_dir) / "metrics.csv").string();
  const std::string metrics_tmp = metrics_path + ".tmp";
  TrainedRun run;
  {
    std::ofstream metrics(metrics_tmp, std::ios::binary | std::ios::trunc);
    if (!metrics) throw IoError("cannot open '" + metrics_tmp + "' for writing");
    run = run_training(model, data, rc, rc.seed, &metrics, "");
  }
  if (std::rename(metrics_tmp.c_str(), metrics_path.c_str()) != 0)
    throw IoError("cannot rename '" + metrics_tmp + "' to '" + metrics_path + "'");

  const std::string model_path = (fs::path(rc.out_dir) / "model.bin").string();
  save_model(model_path, model, data.schema, rc, summary_json(model, run.result, run.test));

  std::cout << "best epoch " << run.result.best_epoch << "  val_auc "
            << pct(run.result.best_val_auc) << "  test_auc " << pct(run.test.auc)
            << "  test_logloss " << fmt("%.4f", run.test.logloss) << "\n"
            << "model written to " << model_path << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_csv) {
  const LoadedModel lm = load_model(model_path);
  const RawTable raw = read_csv(data_path);
  const EncodedDataset ds = encode(raw, lm.schema);
  const EvalReport r = evaluate(*lm.model, ds, lm.config.train.batch_size);

  std::cout << "auc        " << pct(r.auc) << "\n"
            << "logloss    " << fmt("%.6f", r.logloss) << "\n"
            << "instances  " << r.n_instances << "\n"
            << "parameters " << r.n_parameters;
  std::cout << " (";
  for (std::size_t i = 0; i < r.component_params.size(); ++i)
    std::cout << (i ? ", " : "") << r.component_params[i].first << " "
              << r.component_params[i].second;
  std::cout << ")\n";

  if (!out_csv.empty()) {
    const bool fresh = !fs::exists(out_csv);
    std::ofstream f(out_csv, std::ios::binary | std::ios::app);
    if (!f) throw IoError("cannot open '" + out_csv + "' for appending");
    if (fresh) f << "model,data,auc,logloss,instances,parameters\n";
    f << model_path << ',' << data_path << ',' << fmt("%.17g", r.auc) << ','
      << fmt("%.17g", r.logloss) << ',' << r.n_instances << ',' << r.n_parameters << '\n';
  }
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const LoadedModel lm = load_model(model_path);
  const RawTable raw = read_csv(data_path);
  const EncodedDataset ds = encode(raw, lm.schema, /*require_label=*/false);
  const std::vector<double> scores =
      predict_dataset(*lm.model, ds, lm.config.train.batch_size);

  std::ostringstream ss;
  for (double s : scores) ss << fmt("%.17g", s) << '\n';
  write_text_file_atomic(out_path, ss.str());
  if (verbose()) std::cout << scores.size() << " scores written to " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(const CommonArgs& args, std::size_t max_coords, bool inject_bug) {
  RunConfig rc = load_with_overrides(args);
  // The check runs on a 32-instance generated batch with dropout off; the
  // configured variant, gate conditions, and fusion are exercised as-is.
  SyntheticSpec ss = rc.data.use_synthetic ? rc.data.synthetic : SyntheticSpec{};
  ss.n = 32;
  ss.vocab_per_field = std::min<std::size_t>(ss.vocab_per_field, 8);
  rc.model.stream1.dropout = 0.0;
  rc.model.stream2.dropout = 0.0;

  const SyntheticData syn = make_synthetic(ss);
  Model model(rc.model, syn.schema);

  // Zero-initialized tensors (gate output layers, bilinear matrices) would
  // make their paths vanish from both sides of the comparison; a seeded
  // perturbation of every parameter keeps the whole gradient live.
  for (Param* p : model.params()) {
    Rng rng(mix_seed(rc.seed, p->name + "#jitter"));
    for (std::size_t i = 0; i < p->size(); ++i) p->value[i] += rng.uniform(-0.2, 0.2);
  }

  IdMatrix ids(syn.data.n(), syn.data.n_fields);
  std::vector<double> labels(syn.data.n());
  for (std::size_t i = 0; i < syn.data.n(); ++i) {
    for (std::size_t f = 0; f < syn.data.n_fields; ++f) ids(i, f) = syn.data.row(i)[f];
    labels[i] = syn.data.labels[i];
  }

  const double lambda = rc.train.embedding_l2;
  std::vector<Param*> params = model.params();

  // Analytic pass (eval mode, matching the closure below).
  for (Param* p : params) p->grad.zero();
  ModelCache cache;
  const std::vector<double> logits = model.forward(ids, Mode::eval, 0, cache);
  const BceResult bce = bce_loss(logits, labels);
  const EmbeddingGrad eg = model.backward(cache, bce.grad);
  apply_embedding_l2(model.embedding(), eg.rows, lambda);

  if (inject_bug)
    for (Param* p : params)
      for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] *= 2.0;

  const std::vector<std::uint32_t> touched = eg.rows;
  const auto loss_fn = [&]() {
    ModelCache c;
    const std::vector<double> z = model.forward(ids, Mode::eval, 0, c);
    double loss = bce_loss(z, labels).loss;
    if (lambda != 0.0) {
      double pen = 0.0;
      for (std::uint32_t r : touched) {
        const double* w = model.embedding().table.value.row(r);
        for (std::size_t t = 0; t < model.embedding().dim(); ++t) pen += w[t] * w[t];
      }
      loss += lambda * pen;
    }
    return loss;
  };

  GradCheckOptions opts;
  opts.epsilon = 1e-5;
  opts.tolerance = 1e-4;
  opts.max_coords_per_param = max_coords;
  opts.sample_seed = mix_seed(rc.seed, "gradcheck.coords");
  const GradCheckReport report = check_gradients(params, loss_fn, opts);

  const GradCheckEntry* worst = nullptr;
  for (const auto& e : report.entries) {
    if (verbose())
      std::cout << "  " << e.name << ": " << e.coords_checked << " coords, max rel err "
                << fmt("%.3g", e.max_rel_err) << "\n";
    if (!worst || e.max_rel_err > worst->max_rel_err) worst = &e;
  }
  if (report.passed(opts.tolerance)) {
    std::cout << "gradcheck PASS: max rel err " << fmt("%.3g", report.max_rel_err)
              << " over " << report.entries.size() << " tensors (variant "
              << to_string(rc.model.variant) << ")\n";
    return 0;
  }
  std::cout << "gradcheck FAIL: worst offender '" << (worst ? worst->name : "?")
            << "' rel err " << fmt("%.3g", report.max_rel_err) << " at coord "
            << (worst ? worst->worst_coord : 0) << " (analytic "
            << fmt("%.6g", worst ? worst->analytic_at_worst : 0.0) << ", numeric "
            << fmt("%.6g", worst ? worst->numeric_at_worst : 0.0) << ")\n";
  return 1;
}

int cmd_ablate(const CommonArgs& args) {
  const RunConfig rc = load_with_overrides(args);
  if (rc.ablate.variants.empty())
    throw ConfigError("ablate.variants must list at least one variant");
  fs::create_directories(rc.out_dir);
  const PreparedData data = prepare_data(rc, rc.out_dir);

  const std::string csv_path = (fs::path(rc.out_dir) / "ablation.csv").string();
  // Written row by row and flushed so an aborted sweep keeps its partial
  // results, as opposed to the atomic temp+rename used for final artifacts.
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot open '" + csv_path + "' for writing");
  csv << "variant,heads,seed,best_epoch,val_auc,test_auc,test_logloss,n_params,fusion_params,"
         "wall_time\n"
      << std::flush;

  for (Variant v : rc.ablate.variants) {
    ModelConfig base = rc.model;
    base.variant = v;
    const bool sweeps_heads = effective_fusion(base).kind == FusionKind::bilinear;
    const std::vector<std::size_t> heads = sweeps_heads ? rc.ablate.heads
                                                        : std::vector<std::size_t>{1};
    for (std::size_t k : heads) {
      for (std::uint64_t seed : rc.ablate.seeds) {
        ModelConfig mc = base;
        mc.fusion.heads = k;
        mc.seed = seed;
        Model model(mc, data.schema);
        const auto t0 = std::chrono::steady_clock::now();
        RunConfig run_rc = rc;
        run_rc.model = mc;
        const std::string tag =
            std::string(to_string(v)) + " k=" + std::to_string(k) + " seed=" +
            std::to_string(seed) + "  ";
        const TrainedRun run = run_training(model, data, run_rc, seed, nullptr, tag);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::size_t fusion_params = 0;
        for (const auto& [name, count] : model.param_counts())
          if (name == "fusion") fusion_params = count;

        csv << to_string(v) << ',' << k << ',' << seed << ',' << run.result.best_epoch << ','
            << fmt("%.17g", run.result.best_val_auc) << ',' << fmt("%.17g", run.test.auc) << ','
            << fmt("%.17g", run.test.logloss) << ',' << model.n_params() << ',' << fusion_params
            << ',' << fmt("%.6f", wall) << '\n'
            << std::flush;
        std::cout << tag << "test_auc " << pct(run.test.auc) << "  (" << fmt("%.1f", wall)
                  << "s)\n";
      }
    }
  }
  std::cout << "ablation results written to " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream CTR model: training, evaluation, and ablations"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string model_path, out_path, out_csv;
  std::size_t max_coords = 24;
  bool inject_bug = false;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", args.config_path, "JSON run configuration");
    if (need_config) c->required();
    sub->add_option("--seed", args.seed, "override the config seed");
    sub->add_option("--out-dir", args.out_dir, "override the output directory");
    sub->add_option("--data", args.data_path, "override the input data file");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write its container");
  add_common(train_cmd, true);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on labeled data");
  eval_cmd->add_option("--model", model_path, "model container")->required();
  eval_cmd->add_option("--data", args.data_path, "labeled input rows")->required();
  eval_cmd->add_option("--out-csv", out_csv, "append the report to this CSV");

  CLI::App* predict_cmd = app.add_subcommand("predict", "score rows with a saved model");
  predict_cmd->add_option("--model", model_path, "model container")->required();
  predict_cmd->add_option("--data", args.data_path, "input rows (label column optional)")
      ->required();
  predict_cmd->add_option("--out", out_path, "scores file, one per line")->required();

  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of all gradients");
  add_common(gc_cmd, true);
  gc_cmd->add_option("--max-coords", max_coords,
                     "coordinates probed per tensor (0 = exhaustive)");
  gc_cmd->add_flag("--inject-bug", inject_bug, "corrupt gradients to prove the check can fail")
      ->group("");  // hidden test hook

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "sweep variants/heads/seeds into a CSV");
  add_common(ablate_cmd, true);

  CLI11_PARSE(app, argc, argv);
  args.seed_set = app.count_all() && (train_cmd->count("--seed") || gc_cmd->count("--seed") ||
                                      ablate_cmd->count("--seed"));
  args.out_dir_set = train_cmd->count("--out-dir") || gc_cmd->count("--out-dir") ||
                     ablate_cmd->count("--out-dir");
  args.data_set = train_cmd->count("--data") || gc_cmd->count("--data") ||
                  ablate_cmd->count("--data");

  try {
    if (train_cmd->parsed()) return cmd_train(args);
    if (eval_cmd->parsed()) return cmd_eval(model_path, args.data_path, out_csv);
    if (predict_cmd->parsed()) return cmd_predict(model_path, args.data_path, out_path);
    if (gc_cmd->parsed()) return cmd_gradcheck(args, max_coords, inject_bug);
    if (ablate_cmd->parsed()) return cmd_ablate(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

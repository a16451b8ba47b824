#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "finalmlp/config.hpp"
#include "finalmlp/rng.hpp"
#include "finalmlp/serialize.hpp"
#include "finalmlp/synthetic.hpp"
#include "finalmlp/trainer.hpp"

using namespace finalmlp;

namespace {

struct TempDir {
  std::string path;
  TempDir() {
    path = "/tmp/finalmlp_ser_" + std::to_string(::getpid());
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

SyntheticData corpus() {
  SyntheticSpec spec;
  spec.n = 300;
  spec.n_fields = 4;
  spec.vocab_per_field = 9;
  spec.latent_dim = 2;
  spec.seed = 19;
  return make_synthetic(spec);
}

RunConfig matching_run_config(const ModelConfig& mc) {
  RunConfig rc;
  rc.data.use_synthetic = true;
  rc.data.synthetic = SyntheticSpec{300, 4, 9, 2, 1.25, 19};
  rc.model = mc;
  rc.seed = mc.seed;
  rc.out_dir = "out";
  return rc;
}

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.stream1.widths = {8, 6};
  cfg.stream2.widths = {7, 6};
  cfg.fusion = {FusionKind::bilinear, 2};
  cfg.seed = 23;
  return cfg;
}

void jitter(Model& m, std::uint64_t seed) {
  for (Param* p : m.params()) {
    Rng rng(mix_seed(seed, p->name));
    for (std::size_t i = 0; i < p->size(); ++i) p->value[i] += rng.uniform(-0.3, 0.3);
  }
}

}  // namespace

TEST_CASE("a saved model predicts bit for bit after loading") {
  TempDir dir;
  const SyntheticData syn = corpus();
  const ModelConfig mc = tiny_cfg();
  Model m(mc, syn.schema);
  jitter(m, 3);

  const RunConfig rc = matching_run_config(mc);
  const std::string summary = "{\"best_epoch\": 2, \"note\": \"round trip\"}";
  const std::string path = dir.file("model.bin");
  save_model(path, m, syn.schema, rc, summary);

  const LoadedModel lm = load_model(path);
  // The summary is stored as JSON inside the container's JSON block, so it
  // comes back re-serialized; the content survives, not the whitespace.
  CHECK(nlohmann::ordered_json::parse(lm.summary_json) == nlohmann::ordered_json::parse(summary));
  CHECK(lm.schema.to_json_string() == syn.schema.to_json_string());
  CHECK(run_config_to_json(lm.config) == run_config_to_json(rc));
  REQUIRE(lm.model != nullptr);

  const std::vector<double> a = predict_dataset(m, syn.data, 64);
  const std::vector<double> b = predict_dataset(*lm.model, syn.data, 64);
  CHECK(a == b);

  // Every tensor value survives exactly, not just the predictions.
  std::vector<Param*> pa = m.params();
  std::vector<Param*> pb = lm.model->params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value == pb[i]->value);
  }
}

TEST_CASE("saving the same model twice produces identical bytes") {
  TempDir dir;
  const SyntheticData syn = corpus();
  const ModelConfig mc = tiny_cfg();
  Model m(mc, syn.schema);
  jitter(m, 5);
  const RunConfig rc = matching_run_config(mc);

  save_model(dir.file("a.bin"), m, syn.schema, rc, "{}");
  save_model(dir.file("b.bin"), m, syn.schema, rc, "{}");
  CHECK(read_text_file(dir.file("a.bin")) == read_text_file(dir.file("b.bin")));
}

TEST_CASE("the loaded copy trains on without touching the original") {
  TempDir dir;
  const SyntheticData syn = corpus();
  const ModelConfig mc = tiny_cfg();
  Model m(mc, syn.schema);
  jitter(m, 7);
  save_model(dir.file("m.bin"), m, syn.schema, matching_run_config(mc), "{}");
  const std::vector<double> before = predict_dataset(m, syn.data, 64);

  LoadedModel lm = load_model(dir.file("m.bin"));
  TrainConfig tc;
  tc.lr = 0.05;
  tc.batch_size = 64;
  tc.max_epochs = 1;
  tc.patience = 9;
  train(*lm.model, syn.data, syn.data, tc, 1);

  CHECK(predict_dataset(m, syn.data, 64) == before);
  CHECK(predict_dataset(*lm.model, syn.data, 64) != before);
}

TEST_CASE("bad containers fail with a reason") {
  TempDir dir;
  CHECK_THROWS_AS(load_model(dir.file("missing.bin")), IoError);

  write_text_file_atomic(dir.file("junk.bin"), "not a container at all\n");
  CHECK_THROWS_WITH_AS(load_model(dir.file("junk.bin")),
                       doctest::Contains("not a model container"), IoError);

  write_text_file_atomic(dir.file("future.bin"), "FINALMLP-MODEL v999\n10\n0123456789");
  CHECK_THROWS_WITH_AS(load_model(dir.file("future.bin")),
                       doctest::Contains("unsupported model format version"), IoError);

  write_text_file_atomic(dir.file("headless.bin"), "FINALMLP-MODEL v1");
  CHECK_THROWS_AS(load_model(dir.file("headless.bin")), IoError);

  write_text_file_atomic(dir.file("badlen.bin"), "FINALMLP-MODEL v1\nxyz\n{}");
  CHECK_THROWS_WITH_AS(load_model(dir.file("badlen.bin")),
                       doctest::Contains("malformed header length"), IoError);
}

TEST_CASE("a truncated payload is refused") {
  TempDir dir;
  const SyntheticData syn = corpus();
  const ModelConfig mc = tiny_cfg();
  Model m(mc, syn.schema);
  save_model(dir.file("full.bin"), m, syn.schema, matching_run_config(mc), "{}");

  const std::string bytes = read_text_file(dir.file("full.bin"));
  write_text_file_atomic(dir.file("cut.bin"), bytes.substr(0, bytes.size() - 16));
  CHECK_THROWS_WITH_AS(load_model(dir.file("cut.bin")), doctest::Contains("truncated payload"),
                       IoError);

  write_text_file_atomic(dir.file("stub.bin"), bytes.substr(0, 40));
  CHECK_THROWS_AS(load_model(dir.file("stub.bin")), IoError);
}

TEST_CASE("a container whose config disagrees with its tensors is refused") {
  TempDir dir;
  const SyntheticData syn = corpus();
  const ModelConfig mc = tiny_cfg();
  Model m(mc, syn.schema);
  save_model(dir.file("m.bin"), m, syn.schema, matching_run_config(mc), "{}");

  // Same byte length, different meaning: the rebuilt model's embedding no
  // longer matches the manifest shape.
  std::string bytes = read_text_file(dir.file("m.bin"));
  const std::string needle = "\"embed_dim\": 4";
  const std::size_t at = bytes.find(needle);
  REQUIRE(at != std::string::npos);
  bytes.replace(at, needle.size(), "\"embed_dim\": 5");
  write_text_file_atomic(dir.file("warped.bin"), bytes);
  CHECK_THROWS_AS(load_model(dir.file("warped.bin")), IoError);
}

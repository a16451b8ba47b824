#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "finalmlp/config.hpp"
#include "finalmlp/metrics.hpp"
#include "finalmlp/serialize.hpp"
#include "finalmlp/trainer.hpp"

using namespace finalmlp;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr combined

  bool contains(const std::string& needle) const { return out.find(needle) != std::string::npos; }
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(FINALMLP_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  RunResult r;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), p)) r.out += buf;
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  std::string path;
  TempDir() {
    path = "/tmp/finalmlp_cli_" + std::to_string(::getpid());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

std::string base_config() {
  return R"({
  "data": {
    "synthetic": {"n": 1200, "fields": 4, "vocab_per_field": 8, "latent_dim": 2, "seed": 3}
  },
  "model": {
    "embed_dim": 4,
    "stream1": {"widths": [12, 8]},
    "stream2": {"widths": [10, 8]},
    "fusion": {"kind": "bilinear", "heads": 2}
  },
  "train": {"lr": 0.02, "batch_size": 128, "max_epochs": 3, "patience": 9},
  "seed": 5
})";
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

// Everything except the wall-clock column, which is honest timing and
// therefore differs between byte-identical runs.
std::string strip_last_column(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& line : lines) {
    const std::size_t cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

}  // namespace

TEST_CASE("train writes the run artifacts and reports the result") {
  TempDir dir;
  write_text_file_atomic(dir.file("cfg.json"), base_config());
  const std::string out_dir = dir.file("run");

  const RunResult r = run_cli("train --config " + dir.file("cfg.json") + " --out-dir " + out_dir);
  CHECK(r.code == 0);
  CHECK(r.contains("best epoch"));
  CHECK(r.contains("model written to"));
  REQUIRE(fs::exists(out_dir + "/model.bin"));
  REQUIRE(fs::exists(out_dir + "/metrics.csv"));
  REQUIRE(fs::exists(out_dir + "/test.csv"));

  const std::vector<std::string> metrics = read_lines(out_dir + "/metrics.csv");
  REQUIRE(metrics.size() >= 2);
  CHECK(metrics[0] == "epoch,train_loss,val_auc,val_logloss,wall_time");
  CHECK(metrics.size() <= 4);  // header + at most max_epochs rows

  // The held-out file carries the raw rows: header plus 10% of 1200.
  const std::vector<std::string> test_rows = read_lines(out_dir + "/test.csv");
  CHECK(test_rows.size() == 1 + 120);
  CHECK(split(test_rows[0], ',').back() == "label");
}

TEST_CASE("two identical train runs produce identical artifacts") {
  TempDir dir;
  write_text_file_atomic(dir.file("cfg.json"), base_config());
  const std::string out_dir = dir.file("run");
  const std::string cmd = "train --config " + dir.file("cfg.json") + " --out-dir " + out_dir;

  const RunResult r1 = run_cli(cmd);
  REQUIRE(r1.code == 0);
  const std::string model1 = read_text_file(out_dir + "/model.bin");
  const std::string metrics1 = strip_last_column(read_lines(out_dir + "/metrics.csv"));

  const RunResult r2 = run_cli(cmd);
  REQUIRE(r2.code == 0);
  CHECK(read_text_file(out_dir + "/model.bin") == model1);
  CHECK(strip_last_column(read_lines(out_dir + "/metrics.csv")) == metrics1);
}

TEST_CASE("the command line and the library predict the same bits") {
  TempDir dir;
  write_text_file_atomic(dir.file("cfg.json"), base_config());
  const std::string out_dir = dir.file("run");
  REQUIRE(run_cli("train --config " + dir.file("cfg.json") + " --out-dir " + out_dir).code == 0);

  const std::string scores_path = dir.file("scores.txt");
  const RunResult pr = run_cli("predict --model " + out_dir + "/model.bin --data " + out_dir +
                               "/test.csv --out " + scores_path);
  REQUIRE(pr.code == 0);

  LoadedModel lm = load_model(out_dir + "/model.bin");
  const RawTable raw = read_csv(out_dir + "/test.csv");
  const EncodedDataset enc = encode(raw, lm.schema);
  const std::vector<double> expect =
      predict_dataset(*lm.model, enc, lm.config.train.batch_size);

  const std::vector<std::string> lines = read_lines(scores_path);
  REQUIRE(lines.size() == expect.size());
  for (std::size_t i = 0; i < lines.size(); ++i) CHECK(std::stod(lines[i]) == expect[i]);

  // Scoring the same file through eval must agree with those predictions.
  const std::string eval_csv = dir.file("eval.csv");
  const RunResult er = run_cli("eval --model " + out_dir + "/model.bin --data " + out_dir +
                               "/test.csv --out-csv " + eval_csv);
  REQUIRE(er.code == 0);
  CHECK(er.contains("auc"));
  CHECK(er.contains("parameters"));

  std::vector<double> labels(enc.n());
  for (std::size_t i = 0; i < enc.n(); ++i) labels[i] = enc.labels[i];
  const std::vector<std::string> rows = read_lines(eval_csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "model,data,auc,logloss,instances,parameters");
  const std::vector<std::string> cells = split(rows[1], ',');
  REQUIRE(cells.size() == 6);
  CHECK(std::stod(cells[2]) == auc(expect, labels));
  CHECK(std::stod(cells[3]) == logloss(expect, labels));
  CHECK(cells[4] == "120");

  // A second eval appends without repeating the header.
  REQUIRE(run_cli("eval --model " + out_dir + "/model.bin --data " + out_dir +
                  "/test.csv --out-csv " + eval_csv)
              .code == 0);
  CHECK(read_lines(eval_csv).size() == 3);
}

TEST_CASE("gradcheck passes clean and catches an injected bug") {
  TempDir dir;
  write_text_file_atomic(dir.file("cfg.json"), base_config());

  const RunResult ok = run_cli("gradcheck --config " + dir.file("cfg.json") + " --max-coords 12");
  CHECK(ok.code == 0);
  CHECK(ok.contains("gradcheck PASS"));

  const RunResult bad =
      run_cli("gradcheck --config " + dir.file("cfg.json") + " --max-coords 12 --inject-bug");
  CHECK(bad.code == 1);
  CHECK(bad.contains("gradcheck FAIL"));
  CHECK(bad.contains("worst offender"));
}

TEST_CASE("ablate sweeps variants and heads into one table") {
  TempDir dir;
  std::string cfg = base_config();
  const std::size_t at = cfg.rfind('}');
  cfg = cfg.substr(0, at) +
        ",\n  \"ablate\": {\"variants\": [\"MLP\", \"FinalMLP\"], \"heads\": [1, 2], "
        "\"seeds\": [1]}\n}";
  write_text_file_atomic(dir.file("cfg.json"), cfg);
  const std::string out_dir = dir.file("ablate");

  const RunResult r = run_cli("ablate --config " + dir.file("cfg.json") + " --out-dir " + out_dir);
  REQUIRE(r.code == 0);
  const std::vector<std::string> rows = read_lines(out_dir + "/ablation.csv");
  REQUIRE(rows.size() == 4);  // header, MLP, FinalMLP k=1, FinalMLP k=2
  CHECK(rows[0] ==
        "variant,heads,seed,best_epoch,val_auc,test_auc,test_logloss,n_params,fusion_params,"
        "wall_time");

  // The head sweep only applies to the bilinear model, and more heads mean
  // fewer fusion parameters.
  const std::vector<std::string> mlp = split(rows[1], ',');
  const std::vector<std::string> k1 = split(rows[2], ',');
  const std::vector<std::string> k2 = split(rows[3], ',');
  CHECK(mlp[0] == "MLP");
  CHECK(k1[0] == "FinalMLP");
  CHECK(k1[1] == "1");
  CHECK(k2[1] == "2");
  CHECK(std::stoul(k2[8]) < std::stoul(k1[8]));
}

TEST_CASE("quiet mode keeps only the result lines") {
  TempDir dir;
  write_text_file_atomic(dir.file("cfg.json"), base_config());
  const std::string out_dir = dir.file("run");

  FILE* p = ::popen(("FINALMLP_LOG=quiet " + std::string(FINALMLP_CLI_PATH) + " train --config " +
                     dir.file("cfg.json") + " --out-dir " + out_dir + " 2>&1")
                        .c_str(),
                    "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), p)) out += buf;
  REQUIRE(WEXITSTATUS(::pclose(p)) == 0);

  CHECK(out.find("epoch 1/") == std::string::npos);
  CHECK(out.find("best epoch") != std::string::npos);
}

TEST_CASE("failures exit nonzero with an error line") {
  TempDir dir;
  const RunResult missing = run_cli("train --config " + dir.file("nope.json"));
  CHECK(missing.code == 1);
  CHECK(missing.contains("error:"));

  write_text_file_atomic(dir.file("broken.json"), "{not json");
  const RunResult broken = run_cli("train --config " + dir.file("broken.json"));
  CHECK(broken.code == 1);
  CHECK(broken.contains("error:"));
  CHECK(broken.contains("config"));

  const RunResult nomodel =
      run_cli("eval --model " + dir.file("ghost.bin") + " --data " + dir.file("ghost.csv"));
  CHECK(nomodel.code == 1);
  CHECK(nomodel.contains("error:"));
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "finalmlp/metrics.hpp"
#include "finalmlp/synthetic.hpp"
#include "finalmlp/trainer.hpp"

using namespace finalmlp;

namespace {

SyntheticData corpus() {
  SyntheticSpec spec;
  spec.n = 600;
  spec.n_fields = 4;
  spec.vocab_per_field = 8;
  spec.latent_dim = 2;
  spec.seed = 13;
  return make_synthetic(spec);
}

EncodedDataset subset(const EncodedDataset& d, std::size_t begin, std::size_t end) {
  EncodedDataset s;
  s.n_fields = d.n_fields;
  for (std::size_t i = begin; i < end; ++i) s.append(d.row(i), d.labels[i]);
  return s;
}

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.stream1.widths = {8, 6};
  cfg.stream2.widths = {7, 6};
  cfg.fusion = {FusionKind::bilinear, 2};
  cfg.seed = 17;
  return cfg;
}

TrainConfig calm_tc() {
  TrainConfig tc;
  tc.lr = 0.01;
  tc.batch_size = 64;
  tc.max_epochs = 4;
  tc.patience = 99;
  return tc;
}

}  // namespace

TEST_CASE("a few epochs reduce the training loss") {
  const SyntheticData syn = corpus();
  const EncodedDataset tr = subset(syn.data, 0, 500);
  const EncodedDataset va = subset(syn.data, 500, 560);

  Model m(tiny_cfg(), syn.schema);
  const TrainResult res = train(m, tr, va, calm_tc(), 3);

  REQUIRE(res.history.size() == 4);
  CHECK(res.history.back().train_loss < res.history.front().train_loss);
  double best = 0.0;
  for (const EpochRow& r : res.history) {
    CHECK(std::isfinite(r.train_loss));
    CHECK(r.val_auc >= 0.0);
    CHECK(r.val_auc <= 1.0);
    CHECK(r.wall_time >= 0.0);
    best = std::max(best, r.val_auc);
  }
  CHECK(res.best_val_auc == best);
  CHECK(res.best_epoch >= 1);
  CHECK(res.best_epoch <= 4);
  CHECK_FALSE(res.stopped_early);
}

TEST_CASE("the loop is a pure function of its seed") {
  const SyntheticData syn = corpus();
  const EncodedDataset tr = subset(syn.data, 0, 400);
  const EncodedDataset va = subset(syn.data, 400, 450);

  std::vector<std::size_t> epochs_seen;
  Model a(tiny_cfg(), syn.schema);
  const TrainResult ra =
      train(a, tr, va, calm_tc(), 21, [&](const EpochRow& r) { epochs_seen.push_back(r.epoch); });
  Model b(tiny_cfg(), syn.schema);
  const TrainResult rb = train(b, tr, va, calm_tc(), 21);

  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].train_loss == rb.history[i].train_loss);
    CHECK(ra.history[i].val_auc == rb.history[i].val_auc);
    CHECK(ra.history[i].val_logloss == rb.history[i].val_logloss);
  }
  CHECK(ra.best_epoch == rb.best_epoch);

  const std::vector<Param*> pa = a.params();
  const std::vector<Param*> pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);

  const std::vector<std::size_t> expect{1, 2, 3, 4};
  CHECK(epochs_seen == expect);

  // A different seed orders batches differently and lands elsewhere.
  Model c(tiny_cfg(), syn.schema);
  const TrainResult rc = train(c, tr, va, calm_tc(), 22);
  CHECK(rc.history.front().train_loss != ra.history.front().train_loss);
}

TEST_CASE("zero patience with a single epoch runs exactly once") {
  const SyntheticData syn = corpus();
  const EncodedDataset tr = subset(syn.data, 0, 200);
  const EncodedDataset va = subset(syn.data, 200, 240);

  TrainConfig tc = calm_tc();
  tc.max_epochs = 1;
  tc.patience = 0;
  Model m(tiny_cfg(), syn.schema);
  const TrainResult res = train(m, tr, va, tc, 5);
  CHECK(res.history.size() == 1);
  CHECK(res.best_epoch == 1);
  CHECK_FALSE(res.stopped_early);
}

TEST_CASE("early stopping restores the best snapshot") {
  const SyntheticData syn = corpus();
  const EncodedDataset tr = subset(syn.data, 0, 400);
  const EncodedDataset va = subset(syn.data, 400, 430);

  TrainConfig tc = calm_tc();
  tc.lr = 0.4;  // hot enough that validation AUC cannot improve 12 times straight
  tc.max_epochs = 12;
  tc.patience = 0;
  Model m(tiny_cfg(), syn.schema);
  const TrainResult res = train(m, tr, va, tc, 7);

  CHECK(res.stopped_early);
  CHECK(res.history.size() < 12);
  CHECK(res.best_epoch < res.history.size());

  // The weights in hand are the snapshot from the best epoch, not the last.
  const EvalReport ev = evaluate(m, va, tc.batch_size);
  CHECK(ev.auc == res.best_val_auc);
  CHECK(ev.auc == res.history[res.best_epoch - 1].val_auc);
}

TEST_CASE("evaluate agrees with the metric primitives") {
  const SyntheticData syn = corpus();
  const EncodedDataset va = subset(syn.data, 0, 150);
  Model m(tiny_cfg(), syn.schema);

  const std::vector<double> scores = predict_dataset(m, va, 32);
  std::vector<double> labels(va.n());
  for (std::size_t i = 0; i < va.n(); ++i) labels[i] = va.labels[i];

  const EvalReport ev = evaluate(m, va, 32);
  CHECK(ev.auc == auc(scores, labels));
  CHECK(ev.logloss == logloss(scores, labels));
  CHECK(ev.n_instances == va.n());
  CHECK(ev.n_parameters == m.n_params());
  CHECK(ev.component_params == m.param_counts());
}

TEST_CASE("batch size does not change predictions") {
  const SyntheticData syn = corpus();
  const EncodedDataset va = subset(syn.data, 0, 97);
  Model m(tiny_cfg(), syn.schema);
  CHECK(predict_dataset(m, va, 7) == predict_dataset(m, va, 500));
  CHECK(predict_dataset(m, va, 97) == predict_dataset(m, va, 1));
}

TEST_CASE("the embedding penalty matches its closed-form gradient") {
  const SyntheticData syn = corpus();
  Embedding emb(syn.schema, 3, 9);
  emb.table.grad.zero();

  const std::vector<std::uint32_t> rows{1, 4, 7};
  const double lambda = 0.01;
  double expect_penalty = 0.0;
  for (std::uint32_t r : rows)
    for (std::size_t j = 0; j < 3; ++j)
      expect_penalty += lambda * emb.table.value(r, j) * emb.table.value(r, j);

  const double penalty = apply_embedding_l2(emb, rows, lambda);
  CHECK(penalty == doctest::Approx(expect_penalty).epsilon(1e-14));

  for (std::size_t r = 0; r < emb.table.value.rows(); ++r) {
    const bool touched = std::find(rows.begin(), rows.end(), r) != rows.end();
    for (std::size_t j = 0; j < 3; ++j) {
      const double g = emb.table.grad(r, j);
      if (touched)
        CHECK(g == doctest::Approx(2.0 * lambda * emb.table.value(r, j)).epsilon(1e-14));
      else
        CHECK(g == 0.0);
    }
  }

  // Finite differences on one touched coordinate.
  const double eps = 1e-6;
  const double saved = emb.table.value(1, 2);
  auto pen = [&]() {
    double acc = 0.0;
    for (std::uint32_t r : rows)
      for (std::size_t j = 0; j < 3; ++j)
        acc += lambda * emb.table.value(r, j) * emb.table.value(r, j);
    return acc;
  };
  emb.table.value(1, 2) = saved + eps;
  const double fp = pen();
  emb.table.value(1, 2) = saved - eps;
  const double fm = pen();
  emb.table.value(1, 2) = saved;
  CHECK(emb.table.grad(1, 2) == doctest::Approx((fp - fm) / (2 * eps)).epsilon(1e-6));

  // A zero weight adds nothing and leaves gradients alone.
  Embedding other(syn.schema, 3, 9);
  other.table.grad.zero();
  CHECK(apply_embedding_l2(other, rows, 0.0) == 0.0);
  for (std::size_t i = 0; i < other.table.grad.size(); ++i) CHECK(other.table.grad[i] == 0.0);
}

TEST_CASE("an exploding run reports where it diverged") {
  const SyntheticData syn = corpus();
  const EncodedDataset tr = subset(syn.data, 0, 300);
  const EncodedDataset va = subset(syn.data, 300, 340);

  TrainConfig tc = calm_tc();
  tc.lr = 1e155;
  tc.max_epochs = 3;
  Model m(tiny_cfg(), syn.schema);
  try {
    train(m, tr, va, tc, 11);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("training diverged at epoch") != std::string::npos);
  }
}

TEST_CASE("degenerate inputs are rejected up front") {
  const SyntheticData syn = corpus();
  const EncodedDataset tr = subset(syn.data, 0, 100);
  EncodedDataset empty;
  empty.n_fields = tr.n_fields;

  Model m(tiny_cfg(), syn.schema);
  TrainConfig tc = calm_tc();
  CHECK_THROWS_AS(train(m, empty, tr, tc, 1), DataError);
  CHECK_THROWS_AS(train(m, tr, empty, tc, 1), DataError);
  tc.batch_size = 0;
  CHECK_THROWS_AS(train(m, tr, tr, tc, 1), ConfigError);
  tc = calm_tc();
  tc.max_epochs = 0;
  CHECK_THROWS_AS(train(m, tr, tr, tc, 1), ConfigError);
  CHECK_THROWS_AS(predict_dataset(m, tr, 0), ConfigError);
}

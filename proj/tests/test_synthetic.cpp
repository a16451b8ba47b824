#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "finalmlp/data.hpp"
#include "finalmlp/metrics.hpp"
#include "finalmlp/synthetic.hpp"

using namespace finalmlp;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n = 2000;
  s.n_fields = 3;
  s.vocab_per_field = 8;
  s.latent_dim = 2;
  s.seed = 29;
  return s;
}

}  // namespace

TEST_CASE("generation is a pure function of the spec") {
  const SyntheticData a = make_synthetic(small_spec());
  const SyntheticData b = make_synthetic(small_spec());
  CHECK(a.data.ids == b.data.ids);
  CHECK(a.data.labels == b.data.labels);
  CHECK(a.true_logits == b.true_logits);

  SyntheticSpec other = small_spec();
  other.seed = 30;
  const SyntheticData c = make_synthetic(other);
  CHECK(a.data.labels != c.data.labels);
}

TEST_CASE("the schema matches the spec dimensions and group cycle") {
  const SyntheticSpec spec = small_spec();
  const SyntheticData syn = make_synthetic(spec);
  REQUIRE(syn.schema.fields.size() == spec.n_fields);
  for (std::size_t f = 0; f < spec.n_fields; ++f) {
    CHECK(syn.schema.fields[f].name == "f" + std::to_string(f));
    CHECK(syn.schema.fields[f].group == synthetic_field_group(f));
    CHECK(syn.schema.fields[f].size() == spec.vocab_per_field + 1);  // plus OOV
  }
  CHECK(syn.schema.total_features() == spec.n_fields * (spec.vocab_per_field + 1));
  CHECK(synthetic_field_group(0) == FieldGroup::user);
  CHECK(synthetic_field_group(1) == FieldGroup::item);
  CHECK(synthetic_field_group(2) == FieldGroup::context);
  CHECK(synthetic_field_group(3) == FieldGroup::user);

  CHECK(syn.data.n() == spec.n);
  CHECK(syn.data.n_fields == spec.n_fields);
  for (std::size_t i = 0; i < syn.data.n(); ++i)
    for (std::size_t f = 0; f < spec.n_fields; ++f)
      CHECK(syn.data.row(i)[f] < spec.vocab_per_field);  // OOV never sampled
}

TEST_CASE("labels follow the latent logits") {
  const SyntheticData syn = make_synthetic(small_spec());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < syn.data.n(); ++i) pos += syn.data.labels[i];
  const double rate = static_cast<double>(pos) / static_cast<double>(syn.data.n());
  CHECK(rate > 0.15);
  CHECK(rate < 0.85);

  // Scoring with the generator's own log-odds must rank far above chance;
  // that ceiling is what a trained model chases. Three fields give fewer
  // interaction terms than the default eight, so the bar sits lower here.
  std::vector<double> labels(syn.data.n());
  for (std::size_t i = 0; i < syn.data.n(); ++i) labels[i] = syn.data.labels[i];
  CHECK(auc(syn.true_logits, labels) > 0.72);
}

TEST_CASE("a larger latent scale separates the classes more") {
  SyntheticSpec weak = small_spec();
  weak.latent_scale = 0.3;
  SyntheticSpec strong = small_spec();
  strong.latent_scale = 1.5;

  auto ceiling = [](const SyntheticData& d) {
    std::vector<double> labels(d.data.n());
    for (std::size_t i = 0; i < d.data.n(); ++i) labels[i] = d.data.labels[i];
    return auc(d.true_logits, labels);
  };
  CHECK(ceiling(make_synthetic(strong)) > ceiling(make_synthetic(weak)));
}

TEST_CASE("the text export rebuilds into the generator's exact encoding") {
  const SyntheticSpec spec = small_spec();
  const SyntheticData syn = make_synthetic(spec);

  const std::string dir = "/tmp/finalmlp_syn_" + std::to_string(::getpid());
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/syn.csv";
  write_synthetic_csv(path, spec);

  const RawTable raw = read_csv(path);
  REQUIRE(raw.header.size() == spec.n_fields + 1);
  CHECK(raw.header.back() == "label");
  CHECK(raw.rows.size() == spec.n);

  std::vector<FieldDecl> decls;
  for (std::size_t f = 0; f < spec.n_fields; ++f)
    decls.push_back({raw.header[f], synthetic_field_group(f)});
  const FeatureSchema schema = build_schema(raw, decls, 1);
  const EncodedDataset enc = encode(raw, schema);

  REQUIRE(enc.n() == syn.data.n());
  CHECK(enc.ids == syn.data.ids);
  CHECK(enc.labels == syn.data.labels);
  CHECK(schema.to_json_string() == syn.schema.to_json_string());
  std::filesystem::remove_all(dir);
}

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "batchlr/harness.hpp"
#include "batchlr/model.hpp"
#include "batchlr/serialize.hpp"

using namespace batchlr;

namespace {
Dataset small_dataset() {
  ProblemParams p;
  p.d = 2;
  p.n = 3;
  p.m = 6;
  p.alpha = 0.5;
  p.sigma = 0.25;
  p.R = 2.0;
  p.k = 1;
  p.seed = 31;

  AdversaryModel adv;
  adv.kind = AdversaryKind::HeavyTailLabels;
  adv.scale = 2.0;

  Rng r(31);
  Vec beta(2);
  beta << 0.75, -1.5;
  return sample_dataset(p, CovariateModel::parse("rademacher-product"),
                        adv.materialize(p.d, r), beta, r);
}
}  // namespace

TEST_CASE("datasets survive a JSON round trip bit for bit") {
  const Dataset ds = small_dataset();
  const std::string text = dataset_to_json(ds);
  const Dataset back = dataset_from_json(text);

  CHECK(back.params.d == ds.params.d);
  CHECK(back.params.n == ds.params.n);
  CHECK(back.params.m == ds.params.m);
  CHECK(back.params.alpha == ds.params.alpha);
  CHECK(back.params.sigma == ds.params.sigma);
  CHECK(back.params.R == ds.params.R);
  CHECK(back.params.k == ds.params.k);
  CHECK(back.params.seed == ds.params.seed);
  CHECK(back.cov.name() == ds.cov.name());
  CHECK((back.beta_star - ds.beta_star).norm() == 0.0);
  REQUIRE(back.batches.size() == ds.batches.size());
  REQUIRE(back.provenance.size() == ds.provenance.size());
  for (size_t i = 0; i < ds.batches.size(); ++i) {
    CHECK((back.batches[i].X - ds.batches[i].X).norm() == 0.0);
    CHECK((back.batches[i].y - ds.batches[i].y).norm() == 0.0);
    CHECK(back.provenance[i].origin == ds.provenance[i].origin);
    CHECK(back.provenance[i].detail == ds.provenance[i].detail);
  }

  // a second serialization is byte-stable
  CHECK(dataset_to_json(back) == text);
}

TEST_CASE("dataset parsing rejects malformed documents") {
  const std::string text = dataset_to_json(small_dataset());
  CHECK_THROWS(dataset_from_json("{"));
  CHECK_THROWS(dataset_from_json("{}"));

  std::string wrong_tag = text;
  const size_t at = wrong_tag.find("batchlr-dataset-v1");
  REQUIRE(at != std::string::npos);
  wrong_tag.replace(at, 18, "batchlr-dataset-v9");
  CHECK_THROWS(dataset_from_json(wrong_tag));
}

TEST_CASE("candidate lists round trip exactly") {
  std::vector<Vec> cands;
  Vec a(3);
  a << M_PI, -0.0, 1e-300;
  Vec b(3);
  b << 1.0 / 3.0, 6.02214076e23, -7.25;
  cands.push_back(a);
  cands.push_back(b);
  const std::vector<Vec> back = candidates_from_json(candidates_to_json(cands));
  REQUIRE(back.size() == 2);
  for (int j = 0; j < 3; ++j) {
    CHECK(back[0][j] == a[j]);
    CHECK(back[1][j] == b[j]);
  }
}

TEST_CASE("formatted doubles parse back to the same bits") {
  for (double x : {0.1, 1.0 / 3.0, M_PI, 1e-307, 1e308, -2.5, 123456789.123456789}) {
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
}

TEST_CASE("the text hash is frozen") {
  CHECK(fnv1a_hex("") == "14650fb0739d0383");
  CHECK(fnv1a_hex("abc") == "e16801510db89efd");
  CHECK(fnv1a_hex("abc") != fnv1a_hex("abd"));
}

TEST_CASE("experiment configs parse strictly at every level") {
  const std::string minimal = R"({"problem": {"d": 2, "n": 4, "m": 20}})";
  const ExperimentConfig cfg = ExperimentConfig::from_json_text(minimal);
  CHECK(cfg.problem.d == 2);
  CHECK(cfg.problem.alpha == 1.0);  // default
  CHECK(cfg.trials == 1);

  // canonical text is a fixed point
  const std::string canon = cfg.to_json_text();
  const ExperimentConfig again = ExperimentConfig::from_json_text(canon);
  CHECK(again.to_json_text() == canon);
  CHECK(again.hash() == cfg.hash());
  CHECK(cfg.hash().size() == 16);

  const char* bad[] = {
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "extra": 1})",
      R"({"problem": {"d": 2, "n": 4, "m": 20, "extra": 1}})",
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "driver": {"extra": 1}})",
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "driver": {"listmean": {"extra": 1}}})",
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "adversary": {"extra": 1}})",
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "covariates": {"extra": 1}})",
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "sweep": {"extra": []}})",
      R"({"problem": {"d": 2, "n": 4, "m": 20}, "beta": {"extra": 1}})",
  };
  for (const char* doc : bad)
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(doc), config_error);

  // validation still applies to parsed values
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                      R"({"problem": {"d": 2, "n": 4, "m": 20, "alpha": 0.7}})"),
                  config_error);
}

TEST_CASE("config hashes track content not formatting") {
  const std::string a = R"({"problem": {"d": 2, "n": 4, "m": 20}})";
  const std::string b = "{ \"problem\" : {\"m\": 20, \"n\": 4, \"d\": 2} }";
  CHECK(ExperimentConfig::from_json_text(a).hash() ==
        ExperimentConfig::from_json_text(b).hash());
  const std::string c = R"({"problem": {"d": 3, "n": 4, "m": 20}})";
  CHECK(ExperimentConfig::from_json_text(a).hash() !=
        ExperimentConfig::from_json_text(c).hash());
}

TEST_CASE("text files round trip through the filesystem helpers") {
  const std::string path = "/tmp/batchlr_serialize_test.txt";
  const std::string body = "line1\nline2\n\xE2\x9C\x93\n";
  write_text_file(path, body);
  CHECK(read_text_file(path) == body);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_text_file("/nonexistent/path/file.txt"), io_error);
}

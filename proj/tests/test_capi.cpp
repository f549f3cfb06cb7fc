// Exercises the shared library through its C surface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include "batchlr.h"

namespace {
const char* tiny_config = R"({
  "problem": {"d": 3, "n": 8, "m": 60, "alpha": 1.0, "sigma": 0.0, "R": 2.0, "k": 1, "seed": 5},
  "beta": {"norm": 1.5},
  "trials": 2
})";
}

TEST_CASE("version and error strings are always available") {
  REQUIRE(blr_version() != nullptr);
  CHECK(std::strlen(blr_version()) > 0);
  REQUIRE(blr_last_error() != nullptr);
}

TEST_CASE("config parsing reports failures through status and message") {
  blr_config* cfg = nullptr;
  CHECK(blr_config_parse("{ not json", &cfg) == BLR_E_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::strlen(blr_last_error()) > 0);

  CHECK(blr_config_parse(R"({"problem": {"d": 1, "n": 1, "m": 2, "alpha": 0.7}})",
                         &cfg) == BLR_E_CONFIG);
  CHECK(blr_config_parse(nullptr, &cfg) == BLR_E_ARG);
  CHECK(blr_config_parse(tiny_config, nullptr) == BLR_E_ARG);

  REQUIRE(blr_config_parse(tiny_config, &cfg) == BLR_OK);
  REQUIRE(cfg != nullptr);
  CHECK(std::strlen(blr_last_error()) == 0);
  blr_config_free(cfg);
}

TEST_CASE("canonical dump and hash are stable") {
  blr_config* cfg = nullptr;
  REQUIRE(blr_config_parse(tiny_config, &cfg) == BLR_OK);

  char* text = nullptr;
  REQUIRE(blr_config_dump(cfg, &text) == BLR_OK);
  REQUIRE(text != nullptr);

  blr_config* cfg2 = nullptr;
  REQUIRE(blr_config_parse(text, &cfg2) == BLR_OK);
  char* text2 = nullptr;
  REQUIRE(blr_config_dump(cfg2, &text2) == BLR_OK);
  CHECK(std::string(text) == std::string(text2));

  char h1[17], h2[17];
  REQUIRE(blr_config_hash(cfg, h1) == BLR_OK);
  REQUIRE(blr_config_hash(cfg2, h2) == BLR_OK);
  CHECK(std::string(h1) == std::string(h2));
  CHECK(std::string(h1).size() == 16);

  // a seed change must change the canonical text and the hash
  REQUIRE(blr_config_set_seed(cfg2, 99) == BLR_OK);
  char h3[17];
  REQUIRE(blr_config_hash(cfg2, h3) == BLR_OK);
  CHECK(std::string(h3) != std::string(h1));

  blr_string_free(text);
  blr_string_free(text2);
  blr_config_free(cfg);
  blr_config_free(cfg2);
}

TEST_CASE("trials run through the handle API and agree with themselves") {
  blr_config* cfg = nullptr;
  REQUIRE(blr_config_parse(tiny_config, &cfg) == BLR_OK);

  blr_result* res = nullptr;
  REQUIRE(blr_run_trial(cfg, 0, &res) == BLR_OK);
  REQUIRE(res != nullptr);

  int list_size = 0, dim = 0;
  REQUIRE(blr_result_list_size(res, &list_size) == BLR_OK);
  REQUIRE(blr_result_dim(res, &dim) == BLR_OK);
  CHECK(list_size >= 1);
  CHECK(dim == 3);

  double err = -1.0;
  REQUIRE(blr_result_min_error(res, &err) == BLR_OK);
  CHECK(err >= 0.0);
  CHECK(err < 1e-6);  // alpha 1, sigma 0: exact recovery

  double wall = -1.0, baseline = 0.0;
  CHECK(blr_result_wall_ms(res, &wall) == BLR_OK);
  CHECK(wall >= 0.0);
  CHECK(blr_result_baseline_error(res, &baseline) == BLR_OK);

  uint64_t drawn = 0;
  CHECK(blr_result_batches_drawn(res, &drawn) == BLR_OK);
  CHECK(drawn > 0);

  double cand[3] = {0, 0, 0};
  REQUIRE(blr_result_candidate(res, 0, cand) == BLR_OK);
  CHECK((cand[0] != 0.0 || cand[1] != 0.0 || cand[2] != 0.0));
  double weight = -1.0;
  CHECK(blr_result_weight(res, 0, &weight) == BLR_OK);
  CHECK(weight >= 0.0);

  CHECK(blr_result_candidate(res, list_size, cand) == BLR_E_ARG);
  CHECK(blr_result_candidate(res, -1, cand) == BLR_E_ARG);
  CHECK(blr_result_candidate(nullptr, 0, cand) == BLR_E_ARG);

  // same trial index reproduces the same candidate exactly
  blr_result* res2 = nullptr;
  REQUIRE(blr_run_trial(cfg, 0, &res2) == BLR_OK);
  double cand2[3] = {0, 0, 0};
  REQUIRE(blr_result_candidate(res2, 0, cand2) == BLR_OK);
  CHECK(cand[0] == cand2[0]);
  CHECK(cand[1] == cand2[1]);
  CHECK(cand[2] == cand2[2]);

  blr_result_free(res);
  blr_result_free(res2);
  blr_config_free(cfg);
}

TEST_CASE("the command entry point matches CLI exit codes") {
  blr_options opt;
  std::memset(&opt, 0, sizeof(opt));
  CHECK(blr_cmd("no-such-command", &opt) == 2);
  CHECK(blr_cmd(nullptr, &opt) == BLR_E_ARG);

  opt.config_path = "/nonexistent/config.json";
  CHECK(blr_cmd("run", &opt) != 0);
}

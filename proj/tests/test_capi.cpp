#include <doctest.h>

#include <cstring>
#include <string>

#include "unsure.h"

TEST_CASE("version and default seed are exposed") {
  const char* v = unsure_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) > 0);
  CHECK(UNSURE_DEFAULT_SEED == UINT64_C(12345));
}

TEST_CASE("null arguments are rejected cleanly") {
  unsure_report* rep = nullptr;
  CHECK(unsure_run_experiment(nullptr, nullptr, 0, nullptr, &rep) ==
        UNSURE_ERR_INVALID);
  CHECK(rep == nullptr);
  const char* cfg = "{\"experiment\":\"solver_suite\",\"seed\":1}";
  CHECK(unsure_run_experiment(cfg, nullptr, 0, nullptr, nullptr) ==
        UNSURE_ERR_INVALID);
}

TEST_CASE("config errors map to the config status with a message") {
  unsure_report* rep = nullptr;
  CHECK(unsure_run_experiment("{not json", nullptr, 0, nullptr, &rep) ==
        UNSURE_ERR_CONFIG);
  CHECK(rep == nullptr);
  CHECK(std::strlen(unsure_last_error()) > 0);

  CHECK(unsure_run_experiment("{\"experiment\":\"nope\",\"seed\":1}", nullptr,
                              0, nullptr, &rep) == UNSURE_ERR_CONFIG);
  CHECK(rep == nullptr);

  CHECK(unsure_run_config_file("/nonexistent/unsure.json", nullptr, 0, nullptr,
                               &rep) == UNSURE_ERR_IO);
}

TEST_CASE("the solver suite runs through the c interface") {
  const char* cfg = "{\"experiment\":\"solver_suite\",\"seed\":1}";
  const char* overrides[] = {"seed=7"};
  unsure_report* rep = nullptr;
  REQUIRE(unsure_run_experiment(cfg, overrides, 1, nullptr, &rep) == UNSURE_OK);
  REQUIRE(rep != nullptr);

  CHECK(unsure_report_all_pass(rep) == 1);

  std::string csv = unsure_report_csv(rep);
  CHECK(csv.rfind("metric,value,target,tolerance,pass,provenance\n", 0) == 0);
  CHECK(csv.find("circ_dft_vs_direct_r1") != std::string::npos);

  std::string json = unsure_report_json(rep);
  CHECK(json.find("\"experiment\": \"solver_suite\"") != std::string::npos);
  CHECK(json.find("\"seed\": 7") != std::string::npos);

  unsure_report_free(rep);
}

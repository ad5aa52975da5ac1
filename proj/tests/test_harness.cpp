#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "unsure/harness.hpp"

using namespace unsure;

namespace {

Json minimal_config(const std::string& experiment, std::uint64_t seed) {
  Json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  return j;
}

}  // namespace

TEST_CASE("config validation rejects malformed inputs") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(Json::array()), Error);

  Json no_seed;
  no_seed["experiment"] = "solver_suite";
  try {
    ExperimentConfig::from_json(no_seed);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
  }

  CHECK_THROWS_AS(ExperimentConfig::from_json(minimal_config("nonsense", 1)),
                  Error);

  ExperimentConfig ok = ExperimentConfig::from_json(
      minimal_config("solver_suite", 11));
  CHECK(ok.experiment() == "solver_suite");
  CHECK(ok.seed() == 11);
  CHECK(ok.out_dir().empty());
}

TEST_CASE("environment seed override wins over the config seed") {
  setenv("UNSURE_SEED", "777", 1);
  ExperimentConfig cfg = ExperimentConfig::from_json(
      minimal_config("solver_suite", 3));
  unsetenv("UNSURE_SEED");
  CHECK(cfg.seed() == 777);
  CHECK(cfg.raw()["seed"].get<std::uint64_t>() == 777);

  setenv("UNSURE_SEED", "not_a_number", 1);
  CHECK_THROWS_AS(ExperimentConfig::from_json(minimal_config("solver_suite", 3)),
                  Error);
  unsetenv("UNSURE_SEED");
}

TEST_CASE("dotted overrides create nested keys and parse values") {
  ExperimentConfig cfg = ExperimentConfig::from_json(
      minimal_config("solver_suite", 3));

  cfg.set_override("noise.sigma", "0.5");
  CHECK(cfg.raw()["noise"]["sigma"].get<double>() == doctest::Approx(0.5));

  cfg.set_override("a.b.c", "true");
  CHECK(cfg.raw()["a"]["b"]["c"].get<bool>() == true);

  cfg.set_override("label", "hello");
  CHECK(cfg.raw()["label"].get<std::string>() == "hello");

  cfg.set_override("epochs", "40");
  CHECK(cfg.integer("epochs", 0) == 40);

  cfg.set_override("seed", "9");
  CHECK(cfg.seed() == 9);

  CHECK(cfg.number("missing", 2.5) == doctest::Approx(2.5));
  CHECK(cfg.text("experiment", "") == "solver_suite");
  CHECK_THROWS_AS(cfg.set_override("", "1"), Error);
}

TEST_CASE("format_double uses shortest %.10g spellings") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1e-9) == "1e-09");
  CHECK(format_double(0.0625) == "0.0625");
  CHECK(format_double(-3.25) == "-3.25");
}

TEST_CASE("report csv matches the golden layout") {
  RunReport rep;
  rep.experiment = "demo";
  rep.rows.push_back({"alpha", 0.5, 1.0, 0.1, true, "derived"});
  rep.rows.push_back({"beta", 1e-9, 0.0, 1e-8, false, "trivial"});
  CHECK(report_csv(rep) ==
        "metric,value,target,tolerance,pass,provenance\n"
        "alpha,0.5,1,0.1,1,derived\n"
        "beta,1e-09,0,1e-08,0,trivial\n");
  CHECK_FALSE(rep.all_pass());

  Json j = report_json(rep);
  CHECK(j["all_pass"] == false);
  CHECK(j["rows"].size() == 2);
  CHECK_FALSE(j.contains("wall_seconds"));
}

TEST_CASE("curve rendering emits one line per epoch") {
  RunReport rep;
  rep.experiment = "train_denoiser";
  rep.extra["series"]["eta"] = {0.5, 0.25};
  rep.extra["series"]["test_mse"] = {1.5, 0.75};
  CHECK(render_curves(rep) ==
        "epoch,eta,test_mse\n"
        "0,0.5,1.5\n"
        "1,0.25,0.75\n");

  RunReport bare;
  CHECK_THROWS_AS(render_curves(bare), Error);
}

TEST_CASE("repeated runs of the solver suite are byte identical") {
  ExperimentConfig cfg = ExperimentConfig::from_json(
      minimal_config("solver_suite", 11));
  RunReport r1 = run(cfg);
  RunReport r2 = run(cfg);
  CHECK(report_csv(r1) == report_csv(r2));
  CHECK(report_json(r1).dump() == report_json(r2).dump());
  CHECK(r1.run_id == r2.run_id);
  CHECK(r1.run_id.size() == 16);
  CHECK(r1.all_pass());
}

TEST_CASE("reports land on disk when an output directory is set") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "unsure_harness_test";
  fs::remove_all(dir);

  ExperimentConfig cfg = ExperimentConfig::from_json(
      minimal_config("solver_suite", 11));
  RunReport rep = run(cfg);
  write_report(rep, dir.string());

  CHECK(fs::exists(dir / "solver_suite.csv"));
  CHECK(fs::exists(dir / "solver_suite.json"));

  std::ifstream in(dir / "solver_suite.json");
  Json j;
  in >> j;
  CHECK(j["experiment"] == "solver_suite");
  CHECK(j.contains("rows"));
  CHECK_FALSE(j.dump().find("wall") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("configs round trip through files") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "unsure_cfg_test.json";
  {
    std::ofstream out(path);
    out << minimal_config("solver_suite", 42).dump(2);
  }
  ExperimentConfig cfg = ExperimentConfig::from_file(path.string());
  CHECK(cfg.experiment() == "solver_suite");
  CHECK(cfg.seed() == 42);
  fs::remove(path);

  try {
    ExperimentConfig::from_file("/nonexistent/unsure.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
  }

  {
    std::ofstream out(path);
    out << "{not json";
  }
  CHECK_THROWS_AS(ExperimentConfig::from_file(path.string()), Error);
  fs::remove(path);
}

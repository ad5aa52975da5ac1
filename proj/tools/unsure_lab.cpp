#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unsure.h"

namespace {

uint64_t seed_from_env(uint64_t fallback) {
  if (const char* env = std::getenv("UNSURE_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unsure-lab: noise-blind estimator experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> sets;
  CLI::App* cmd_run =
      app.add_subcommand("run", "Run one experiment from a JSON config");
  cmd_run->add_option("config", config_path, "Experiment config file")
      ->required();
  cmd_run->add_option("--set", sets,
                      "Dotted-path config override, key=value (repeatable)");
  cmd_run->add_option("--out", out_dir, "Directory for CSV/JSON reports");

  std::string suite_name;
  std::string suite_out = "acceptance_out";
  CLI::App* cmd_suite = app.add_subcommand("suite", "Run a named suite");
  cmd_suite->add_option("name", suite_name, "Suite name (acceptance)")
      ->required();
  cmd_suite->add_option("--out", suite_out, "Directory for acceptance.csv");

  CLI11_PARSE(app, argc, argv);

  if (cmd_run->parsed()) {
    std::vector<const char*> ov;
    ov.reserve(sets.size());
    for (const auto& s : sets) ov.push_back(s.c_str());
    unsure_report* rep = nullptr;
    unsure_status st = unsure_run_config_file(
        config_path.c_str(), ov.empty() ? nullptr : ov.data(), ov.size(),
        out_dir.empty() ? nullptr : out_dir.c_str(), &rep);
    if (st != UNSURE_OK) {
      std::fprintf(stderr, "error: %s\n", unsure_last_error());
      return 2;
    }
    std::fputs(unsure_report_csv(rep), stdout);
    int ok = unsure_report_all_pass(rep);
    unsure_report_free(rep);
    return ok ? 0 : 1;
  }

  if (suite_name != "acceptance") {
    std::fprintf(stderr, "unknown suite: %s\n", suite_name.c_str());
    return 2;
  }
  int failures = 0;
  unsure_status st = unsure_run_acceptance(
      suite_out.c_str(), seed_from_env(UNSURE_DEFAULT_SEED), &failures);
  if (st != UNSURE_OK) {
    std::fprintf(stderr, "error: %s\n", unsure_last_error());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}

#include "unsure.h"

#include <exception>
#include <iostream>
#include <memory>
#include <string>

#include "unsure/harness.hpp"

struct unsure_report {
  unsure::RunReport report;
  std::string csv;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

unsure_status status_from(const unsure::Error& e) {
  using unsure::ErrorCode;
  switch (e.code()) {
    case ErrorCode::config_error:
      return UNSURE_ERR_CONFIG;
    case ErrorCode::io_error:
      return UNSURE_ERR_IO;
    case ErrorCode::invalid_argument:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::empty_dataset:
    case ErrorCode::unsupported:
      return UNSURE_ERR_INVALID;
    default:
      return UNSURE_ERR_NUMERIC;
  }
}

template <class Fn>
unsure_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const unsure::Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UNSURE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return UNSURE_ERR_INTERNAL;
  }
}

unsure_status run_with_config(unsure::ExperimentConfig cfg,
                              const char* const* overrides,
                              size_t n_overrides, const char* out_dir,
                              unsure_report** out_report) {
  for (size_t i = 0; i < n_overrides; ++i) {
    std::string kv = overrides[i] ? overrides[i] : "";
    auto eq = kv.find('=');
    unsure::require(eq != std::string::npos && eq > 0,
                    unsure::ErrorCode::config_error,
                    "override must look like key=value: " + kv);
    cfg.set_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (out_dir && *out_dir) cfg.set_out_dir(out_dir);
  auto rep = std::make_unique<unsure_report>();
  rep->report = unsure::run(cfg);
  rep->csv = unsure::report_csv(rep->report);
  rep->json = unsure::report_json(rep->report).dump(2);
  *out_report = rep.release();
  return UNSURE_OK;
}

}  // namespace

extern "C" {

const char* unsure_version(void) { return "1.0.0"; }

const char* unsure_last_error(void) { return g_last_error.c_str(); }

unsure_status unsure_run_experiment(const char* config_json,
                                    const char* const* overrides,
                                    size_t n_overrides, const char* out_dir,
                                    unsure_report** out_report) {
  if (!config_json || !out_report) {
    g_last_error = "null argument";
    return UNSURE_ERR_INVALID;
  }
  return guarded([&]() -> unsure_status {
    unsure::Json j = unsure::Json::parse(config_json, nullptr, false);
    unsure::require(!j.is_discarded(), unsure::ErrorCode::config_error,
                    "config is not valid JSON");
    return run_with_config(unsure::ExperimentConfig::from_json(std::move(j)),
                           overrides, n_overrides, out_dir, out_report);
  });
}

unsure_status unsure_run_config_file(const char* path,
                                     const char* const* overrides,
                                     size_t n_overrides, const char* out_dir,
                                     unsure_report** out_report) {
  if (!path || !out_report) {
    g_last_error = "null argument";
    return UNSURE_ERR_INVALID;
  }
  return guarded([&]() -> unsure_status {
    return run_with_config(unsure::ExperimentConfig::from_file(path),
                           overrides, n_overrides, out_dir, out_report);
  });
}

unsure_status unsure_run_acceptance(const char* out_dir, uint64_t seed,
                                    int* out_failures) {
  if (!out_failures) {
    g_last_error = "null argument";
    return UNSURE_ERR_INVALID;
  }
  return guarded([&]() -> unsure_status {
    unsure::AcceptanceResult res = unsure::run_acceptance(
        out_dir ? out_dir : "", seed, std::cout);
    *out_failures = res.failures;
    return UNSURE_OK;
  });
}

int unsure_report_all_pass(const unsure_report* r) {
  return r && r->report.all_pass() ? 1 : 0;
}

const char* unsure_report_csv(const unsure_report* r) {
  return r ? r->csv.c_str() : "";
}

const char* unsure_report_json(const unsure_report* r) {
  return r ? r->json.c_str() : "";
}

void unsure_report_free(unsure_report* r) { delete r; }

}  // extern "C"

#pragma once

#include <iosfwd>
#include <string>

#include "unsure/train.hpp"

namespace unsure {

struct MetricRow {
  std::string metric;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string provenance;  // paper | trivial | derived
};

struct RunReport {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string run_id;
  Json config;
  std::vector<MetricRow> rows;
  std::vector<std::string> notes;
  Json extra;  // per-epoch series and other experiment artifacts
  double wall_seconds = 0.0;  // console only; never serialized

  bool all_pass() const;
};

class ExperimentConfig {
 public:
  static ExperimentConfig from_json(Json j);
  static ExperimentConfig from_file(const std::string& path);

  // Dotted-path override, e.g. "noise.sigma=0.25". The value is parsed as
  // JSON when possible and kept as a string otherwise.
  void set_override(const std::string& dotted_key, const std::string& value);

  const std::string& experiment() const { return experiment_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& out_dir() const { return out_dir_; }
  void set_out_dir(std::string dir) { out_dir_ = std::move(dir); }
  const Json& raw() const { return raw_; }

  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;

 private:
  void refresh();

  Json raw_;
  std::string experiment_;
  std::uint64_t seed_ = 0;
  std::string out_dir_;
};

// Executes the experiment and, when out_dir is set, writes
// <experiment>.csv, <experiment>.json, and any curve files.
RunReport run(const ExperimentConfig& cfg);

std::string report_csv(const RunReport& report);
Json report_json(const RunReport& report);
void write_report(const RunReport& report, const std::string& out_dir);

// Per-epoch (eta, test MSE) series from a train_denoiser report.
std::string render_curves(const RunReport& report);

std::string format_double(double v);  // %.10g, shared by all writers

struct AcceptanceResult {
  std::vector<MetricRow> rows;
  int failures = 0;
};

// Runs the twelve acceptance checks, printing one line per criterion to log
// and writing acceptance.csv under out_dir (when nonempty).
AcceptanceResult run_acceptance(const std::string& out_dir, std::uint64_t seed,
                                std::ostream& log);

}  // namespace unsure

#include "unsure/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "unsure/oracles.hpp"

namespace unsure {

namespace {

std::uint64_t fnv64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

MetricRow rel_row(std::string name, double value, double target, double tol,
                  std::string prov) {
  MetricRow r{std::move(name), value, target, tol, false, std::move(prov)};
  r.pass = std::abs(value - target) <= tol * std::abs(target);
  return r;
}

MetricRow abs_row(std::string name, double value, double target, double tol,
                  std::string prov) {
  MetricRow r{std::move(name), value, target, tol, false, std::move(prov)};
  r.pass = std::abs(value - target) <= tol;
  return r;
}

// pass when value <= target * (1 + frac)
MetricRow upper_row(std::string name, double value, double target, double frac,
                    std::string prov) {
  MetricRow r{std::move(name), value, target, frac, false, std::move(prov)};
  r.pass = value <= target * (1.0 + frac);
  return r;
}

MetricRow lower_row(std::string name, double value, double target,
                    std::string prov) {
  MetricRow r{std::move(name), value, target, 0.0, false, std::move(prov)};
  r.pass = value > target;
  return r;
}

struct RiskEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Importance-sampled empirical risk of the scalar ZED estimator under the
// two-deltas prior: half the proposal mass sits at the sign-flip boundary so
// rare posterior flips are resolved at any noise level.
RiskEstimate is_two_deltas_zed_risk(double a, const NoisyMarginal& marg,
                                    double eta, int samples, Rng& rng) {
  const double sigma = marg.sigma();
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double acc = 0.0, acc2 = 0.0;
  for (int k = 0; k < samples; ++k) {
    double x = u01(rng) < 0.5 ? a : -a;
    double sgn = x > 0 ? 1.0 : -1.0;
    double mu2 = -sgn * a / sigma;
    double eps = n01(rng) + (u01(rng) < 0.5 ? mu2 : 0.0);
    double lr = std::exp(eps * mu2 - 0.5 * mu2 * mu2);
    double w = 1.0 / (0.5 + 0.5 * lr);
    double y = x + sigma * eps;
    double fy = y + eta * marg.score(y);
    double v = w * (fy - x) * (fy - x);
    acc += v;
    acc2 += v * v;
  }
  double mean = acc / samples;
  double var = std::max(0.0, acc2 / samples - mean * mean);
  return {mean, std::sqrt(var / samples)};
}

RiskEstimate mc_zed_risk(const SignalPrior& prior, const NoisyMarginal& marg,
                         double eta, int samples, Rng& rng) {
  const double sigma = marg.sigma();
  std::normal_distribution<double> n01(0.0, 1.0);
  double acc = 0.0, acc2 = 0.0;
  for (int k = 0; k < samples; ++k) {
    double x = prior.sample(rng);
    double y = x + sigma * n01(rng);
    double fy = y + eta * marg.score(y);
    double v = (fy - x) * (fy - x);
    acc += v;
    acc2 += v * v;
  }
  double mean = acc / samples;
  double var = std::max(0.0, acc2 / samples - mean * mean);
  return {mean, std::sqrt(var / samples)};
}

struct NamedPrior {
  std::string name;
  SignalPrior prior;
};

std::vector<NamedPrior> table_priors() {
  return {{"two_deltas", SignalPrior::two_deltas(0.5)},
          {"gaussian", SignalPrior::gaussian(0.0, 1.0)},
          {"spike_slab", SignalPrior::spike_slab()}};
}

}  // namespace

bool RunReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const MetricRow& r) { return r.pass; });
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

ExperimentConfig ExperimentConfig::from_json(Json j) {
  ExperimentConfig cfg;
  cfg.raw_ = std::move(j);
  cfg.refresh();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open config: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::config_error, std::string("config parse error: ") + e.what());
  }
  return from_json(std::move(j));
}

void ExperimentConfig::refresh() {
  require(raw_.is_object(), ErrorCode::config_error,
          "config must be a JSON object");
  require(raw_.contains("experiment") && raw_["experiment"].is_string(),
          ErrorCode::config_error, "config needs an experiment name");
  experiment_ = raw_["experiment"].get<std::string>();
  static const char* known[] = {"table_appc",     "prop2_sweep",
                                "solver_suite",   "train_denoiser",
                                "train_score_plugin", "inverse_demo"};
  bool ok = std::any_of(std::begin(known), std::end(known),
                        [&](const char* k) { return experiment_ == k; });
  require(ok, ErrorCode::config_error,
          "unknown experiment: " + experiment_);
  require(raw_.contains("seed"), ErrorCode::config_error,
          "config needs a seed");
  seed_ = raw_["seed"].get<std::uint64_t>();
  if (const char* env = std::getenv("UNSURE_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    require(end && *end == '\0', ErrorCode::config_error,
            "UNSURE_SEED must be an unsigned integer");
    seed_ = static_cast<std::uint64_t>(v);
    raw_["seed"] = seed_;
  }
  if (raw_.contains("out") && raw_["out"].is_string())
    out_dir_ = raw_["out"].get<std::string>();
}

void ExperimentConfig::set_override(const std::string& dotted_key,
                                    const std::string& value) {
  require(!dotted_key.empty(), ErrorCode::config_error, "empty override key");
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (...) {
    parsed = value;  // keep as string
  }
  Json* node = &raw_;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted_key.find('.', start);
    std::string part = dotted_key.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    require(!part.empty(), ErrorCode::config_error,
            "bad override key: " + dotted_key);
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
  refresh();
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
  if (raw_.contains(key) && raw_[key].is_number())
    return raw_[key].get<double>();
  return fallback;
}

int ExperimentConfig::integer(const std::string& key, int fallback) const {
  if (raw_.contains(key) && raw_[key].is_number())
    return raw_[key].get<int>();
  return fallback;
}

std::string ExperimentConfig::text(const std::string& key,
                                   const std::string& fallback) const {
  if (raw_.contains(key) && raw_[key].is_string())
    return raw_[key].get<std::string>();
  return fallback;
}

std::string report_csv(const RunReport& report) {
  std::string out = "metric,value,target,tolerance,pass,provenance\n";
  for (const auto& r : report.rows) {
    out += r.metric;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += format_double(r.target);
    out += ',';
    out += format_double(r.tolerance);
    out += ',';
    out += r.pass ? '1' : '0';
    out += ',';
    out += r.provenance;
    out += '\n';
  }
  return out;
}

Json report_json(const RunReport& report) {
  Json j;
  j["experiment"] = report.experiment;
  j["seed"] = report.seed;
  j["run_id"] = report.run_id;
  j["config"] = report.config;
  j["all_pass"] = report.all_pass();
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["metric"] = r.metric;
    row["value"] = r.value;
    row["target"] = r.target;
    row["tolerance"] = r.tolerance;
    row["pass"] = r.pass;
    row["provenance"] = r.provenance;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["notes"] = report.notes;
  if (!report.extra.is_null()) j["extra"] = report.extra;
  return j;
}

std::string render_curves(const RunReport& report) {
  require(report.extra.contains("series"), ErrorCode::invalid_argument,
          "report has no per-epoch series");
  const Json& s = report.extra["series"];
  const auto& eta = s.at("eta");
  const auto& mse = s.at("test_mse");
  std::string out = "epoch,eta,test_mse\n";
  for (std::size_t i = 0; i < eta.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(eta[i].get<double>());
    out += ',';
    out += format_double(mse[i].get<double>());
    out += '\n';
  }
  return out;
}

void write_report(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / (report.experiment + ".csv"));
    require(csv.good(), ErrorCode::io_error, "cannot write report csv");
    csv << report_csv(report);
  }
  {
    std::ofstream js(fs::path(out_dir) / (report.experiment + ".json"));
    require(js.good(), ErrorCode::io_error, "cannot write report json");
    js << report_json(report).dump(2) << "\n";
  }
  if (report.extra.contains("series")) {
    std::ofstream curves(fs::path(out_dir) /
                         (report.experiment + "_curves.csv"));
    require(curves.good(), ErrorCode::io_error, "cannot write curves csv");
    curves << render_curves(report);
  }
}

namespace {

SignalPrior prior_from(const ExperimentConfig& cfg, const SignalPrior& fallback) {
  if (cfg.raw().contains("prior"))
    return SignalPrior::from_json(cfg.raw()["prior"]);
  return fallback;
}

RunReport exp_table_appc(const ExperimentConfig& cfg) {
  RunReport rep;
  const double sigma = cfg.number("sigma", 0.25);
  const double s2 = sigma * sigma;
  const int samples = cfg.integer("samples", 100000);
  const double mmse_targets[3] = {0.017, 0.059, 0.043};
  const double cv_targets[3] = {0.250, 1.0, 0.500};
  const double zed_targets[3] = {0.024, 1.0, 0.135};

  auto priors = table_priors();
  for (std::size_t p = 0; p < priors.size(); ++p) {
    NoisyMarginal marg(priors[p].prior, sigma);
    double mmse = marg.mmse();
    rep.rows.push_back(rel_row("mmse_" + priors[p].name, mmse,
                               mmse_targets[p], 0.10, "paper"));

    Dataset data = sample_measurements(
        priors[p].prior, NoiseModel::isotropic(sigma), 1, samples,
        derive_seed(cfg.seed(), "table_cv_" + priors[p].name), true);
    double cv_risk = empirical_risk(Estimator::cv(priors[p].prior), data);
    rep.rows.push_back(rel_row("cv_" + priors[p].name, cv_risk, cv_targets[p],
                               0.10, "paper"));

    double zed = zed_mse_from_mmse(s2, mmse);
    rep.rows.push_back(rel_row("zed_" + priors[p].name, zed, zed_targets[p],
                               0.10, "paper"));

    double omega = 1.0 / (s2 * marg.expected_score_sq());
    MetricRow om{"omega_" + priors[p].name, omega, 1.0, 0.0, false, "derived"};
    om.pass = omega >= 1.0 - 1e-9;
    rep.rows.push_back(om);
  }
  rep.notes.push_back(
      "table reproduced with deltas at +/-0.5 and sigma=0.25; the MMSE row is "
      "consistent with those settings");
  rep.notes.push_back(
      "omega = eta/sigma^2 >= 1 for every prior here; the mmse/identity "
      "combination weight reaches [0,1] only in the zero-MMSE limit");
  return rep;
}

RunReport exp_prop2_sweep(const ExperimentConfig& cfg) {
  RunReport rep;
  const int samples = cfg.integer("samples", 100000);
  const double sigmas[4] = {0.05, 0.1, 0.25, 0.5};
  const char* signames[4] = {"0.05", "0.1", "0.25", "0.5"};
  auto priors = table_priors();
  double max_rel_gap = 0.0;
  int cell = 0;
  for (std::size_t p = 0; p < priors.size(); ++p) {
    for (int si = 0; si < 4; ++si, ++cell) {
      const double sigma = sigmas[si];
      const double s2 = sigma * sigma;
      NoisyMarginal marg(priors[p].prior, sigma);
      double mmse = marg.mmse();
      double form = zed_mse_from_mmse(s2, mmse);
      double eta = 1.0 / marg.expected_score_sq();

      Rng rng = substream(cfg.seed(), "prop2", cell);
      RiskEstimate emp;
      if (priors[p].name == "two_deltas") {
        emp = is_two_deltas_zed_risk(0.5, marg, eta, samples, rng);
      } else {
        emp = mc_zed_risk(priors[p].prior, marg, eta, samples, rng);
      }

      std::string cellname = priors[p].name + "_s" + signames[si];
      MetricRow row{"zed_risk_" + cellname, emp.mean, form, 0.03, false,
                    "derived"};
      bool zero_cell = form <= 1e-9 && emp.mean <= 1e-9;
      row.pass = zero_cell || std::abs(emp.mean - form) <= 0.03 * form;
      rep.rows.push_back(row);
      if (!zero_cell && form > 0)
        max_rel_gap = std::max(max_rel_gap, std::abs(emp.mean - form) / form);

      // Multiplier identity chain: 1/E[s^2] vs sigma^4/(sigma^2 - MMSE) vs
      // ZED risk + sigma^2 (per pixel).
      double a1 = eta;
      double a2 = s2 * s2 / (s2 - mmse);
      double a3 = form + s2;
      double gap = std::max(std::abs(a1 - a2), std::abs(a2 - a3));
      rep.rows.push_back(
          abs_row("chain_gap_" + cellname, gap, 0.0, 1e-4, "derived"));
    }
  }
  MetricRow mx{"max_rel_gap", max_rel_gap, 0.03, 0.0, false, "derived"};
  mx.pass = max_rel_gap <= 0.03;
  rep.rows.push_back(mx);
  rep.notes.push_back(
      "two-deltas cells use an importance-sampled risk estimate (proposal "
      "mixes unit noise at the origin and at the sign-flip boundary); cells "
      "where the closed form underflows double precision pass when both "
      "sides are below 1e-9");
  return rep;
}

RunReport exp_solver_suite(const ExperimentConfig& cfg) {
  RunReport rep;
  const std::uint64_t seed = cfg.seed();

  // General solver vs gradient-ascent oracle on random PSD moment matrices.
  const int sizes[3][2] = {{2, 4}, {3, 5}, {4, 6}};
  for (int k = 0; k < 3; ++k) {
    const int s = sizes[k][0];
    const int n = sizes[k][1];
    Rng rng = substream(seed, "solver_general", k);
    Mat R(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) R(i, j) = draw_normal(rng);
    ScoreMoments m;
    m.n = n;
    m.sample_count = 1;
    m.radius = 0;
    m.H = R * R.transpose() / n + 0.1 * Mat::Identity(n, n);
    m.trace_H = m.H.trace();
    m.autocorr = Vec::Constant(1, m.trace_H / n);
    m.pg = Mat::Zero(3, 3);
    std::vector<Mat> psi;
    for (int j = 0; j < s; ++j) {
      Mat P(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) P(a, b) = draw_normal(rng);
      psi.push_back(P);
    }
    CovarianceBasis basis = CovarianceBasis::general(psi);
    MultiplierSolution sol = solve_general(m, basis);
    Vec ora = oracle::maximize_basis_objective(m, basis, 10,
                                               derive_seed(seed, "gora"));
    double gap = (sol.eta - ora).cwiseAbs().maxCoeff();
    rep.rows.push_back(abs_row("general_gap_" + std::to_string(k), gap, 0.0,
                               1e-6, "derived"));

    double obj = basis_objective(m, basis, sol.eta);
    double margin = -1e300;
    Rng prng = substream(seed, "solver_perturb", k);
    for (int t = 0; t < 20; ++t) {
      Vec d = draw_normal_vec(prng, s);
      d *= 1e-3 / d.norm();
      margin = std::max(margin, basis_objective(m, basis, Vec(sol.eta + d)) - obj);
    }
    MetricRow pr{"general_perturb_" + std::to_string(k), margin, 0.0, 1e-9,
                 margin <= 1e-9, "derived"};
    rep.rows.push_back(pr);
  }

  // Circulant: DFT solve vs dense solve vs general solve vs ascent oracle.
  for (int r = 1; r <= 3; ++r) {
    const int n = 2 * r + 1;
    ScoreMoments m;
    m.n = n;
    m.sample_count = 1;
    m.radius = r;
    m.autocorr = Vec(2 * r + 1);
    for (int lag = -r; lag <= r; ++lag)
      m.autocorr[lag + r] = 1.3 * std::pow(0.35, std::abs(lag));
    m.H = Mat(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        int d = std::min((j - i + n) % n, (i - j + n) % n);
        m.H(i, j) = 1.3 * std::pow(0.35, d);
      }
    }
    m.trace_H = m.H.trace();
    m.pg = Mat::Zero(3, 3);

    MultiplierSolution dft = solve_circulant(m, r);
    MultiplierSolution direct = solve_circulant_direct(m, r);
    double g1 = (dft.eta - direct.eta).cwiseAbs().maxCoeff();
    rep.rows.push_back(abs_row("circ_dft_vs_direct_r" + std::to_string(r), g1,
                               0.0, 1e-10, "derived"));

    CovarianceBasis cb = CovarianceBasis::circulant(n, r);
    MultiplierSolution gen = solve_general(m, cb);
    double g2 = (dft.eta - gen.eta).cwiseAbs().maxCoeff();
    rep.rows.push_back(abs_row("circ_vs_general_r" + std::to_string(r), g2,
                               0.0, 1e-10, "derived"));

    Vec ora = oracle::maximize_basis_objective(m, cb, 10,
                                               derive_seed(seed, "cora"));
    double g3 = (dft.eta - ora).cwiseAbs().maxCoeff();
    rep.rows.push_back(abs_row("circ_vs_oracle_r" + std::to_string(r), g3, 0.0,
                               1e-6, "derived"));
  }

  // Poisson-Gaussian closed form vs grid + Newton oracle.
  {
    SignalPrior prior(std::vector<PriorComponent>{
        PriorComponent{0.5, PointMass{1.0}}, PriorComponent{0.5, PointMass{2.0}}});
    NoiseModel noise = NoiseModel::poisson_gaussian(0.05, 0.1);
    Dataset data = sample_measurements(prior, noise, 6, 400,
                                       derive_seed(seed, "pg_data"), false);
    ScoreField field = ScoreField::learned(
        [](const Vec& y) -> Vec { return -(y.array() - 1.5).matrix() / 0.5; });
    ScoreMoments m = accumulate_moments(field, data, 0);
    MultiplierSolution sol = solve_poisson_gaussian(m, 6);
    auto [oe, og] = oracle::maximize_pg_objective(m, 6);
    rep.rows.push_back(abs_row("pg_eta_gap", std::abs(sol.eta[0] - oe), 0.0,
                               1e-6, "derived"));
    rep.rows.push_back(abs_row("pg_gamma_gap", std::abs(*sol.gamma - og), 0.0,
                               1e-6, "derived"));

    double obj = pg_objective(m, 6, sol.eta[0], *sol.gamma);
    double margin = -1e300;
    Rng prng = substream(seed, "pg_perturb");
    for (int t = 0; t < 20; ++t) {
      Vec d = draw_normal_vec(prng, 2);
      d *= 1e-3 / d.norm();
      margin = std::max(margin, pg_objective(m, 6, sol.eta[0] + d[0],
                                             *sol.gamma + d[1]) -
                                    obj);
    }
    MetricRow pr{"pg_perturb", margin, 0.0, 1e-9, margin <= 1e-9, "derived"};
    rep.rows.push_back(pr);
  }

  // Hudson closed form vs golden-section oracle.
  {
    SignalPrior prior = SignalPrior::gaussian(0.0, 1.0);
    NoiseModel noise = NoiseModel::isotropic(0.3);
    Dataset data = sample_measurements(prior, noise, 6, 300,
                                       derive_seed(seed, "hudson_data"), false);
    NoisyMarginal marg(prior, 0.3);
    ScoreField field = ScoreField::analytic(marg);
    auto a = [](double y) { return 1.0 / (1.0 + y * y); };
    HudsonOptions opts;
    opts.a_prime = [](double y) {
      double d = 1.0 + y * y;
      return -2.0 * y / (d * d);
    };
    MultiplierSolution sol = solve_hudson(field, data, a, opts);
    double ora = oracle::maximize_hudson_objective(field, data, a);
    rep.rows.push_back(abs_row("hudson_gap", std::abs(sol.eta[0] - ora), 0.0,
                               1e-6, "derived"));
  }

  return rep;
}

RunReport exp_train_denoiser(const ExperimentConfig& cfg) {
  RunReport rep;
  const int n = cfg.integer("n", 16);
  const double sigma = cfg.number("sigma", 0.25);
  const int train_count = cfg.integer("samples", 2000);
  const int test_count = cfg.integer("test_samples", 1000);
  SignalPrior prior = prior_from(cfg, SignalPrior::two_deltas(0.5));
  NoiseModel noise = NoiseModel::isotropic(sigma);

  Dataset train = sample_measurements(prior, noise, n, train_count,
                                      derive_seed(cfg.seed(), "train_data"),
                                      false);
  Dataset test = sample_measurements(prior, noise, n, test_count,
                                     derive_seed(cfg.seed(), "test_data"),
                                     true);

  FamilySpec fam;
  fam.tag = LossFamily::unsure;
  SaddleConfig sc;
  sc.net.pixelwise = cfg.integer("pixelwise", 1) != 0;
  sc.net.hidden = {32};
  if (cfg.raw().contains("hidden")) {
    sc.net.hidden.clear();
    for (const auto& h : cfg.raw()["hidden"]) sc.net.hidden.push_back(h.get<int>());
  }
  sc.epochs = cfg.integer("epochs", 400);
  sc.batch = cfg.integer("batch", 32);
  sc.theta_step = cfg.number("theta_step", 2e-3);
  sc.alpha = cfg.number("alpha", 1e-3);
  sc.mu = cfg.number("mu", 0.9);
  sc.tau = cfg.number("tau", 0.01);
  sc.probes = cfg.integer("probes", 1);
  sc.warmup_epochs = cfg.integer("warmup_epochs", 1);
  sc.net.gain = cfg.number("gain", 1.0);
  sc.seed = derive_seed(cfg.seed(), "train");
  if (cfg.raw().contains("eta_init"))
    sc.eta_init = Vec::Constant(1, cfg.number("eta_init", 0.0625));

  std::vector<double> eta_series, mse_series;
  sc.on_epoch = [&](int, const SaddleState& state) {
    eta_series.push_back(state.eta[0]);
    DenoiserNet snapshot = state.net;
    Estimator est = Estimator::learned(
        [snapshot](const Vec& y) -> Vec { return snapshot(y); });
    mse_series.push_back(empirical_risk(est, test));
  };

  SaddleResult res = train_unsure(train, fam, sc);

  double final_eta = res.eta[0];
  double final_mse = mse_series.empty() ? 0.0 : mse_series.back();
  rep.rows.push_back(rel_row("final_eta", final_eta, 0.0859, 0.20, "derived"));
  rep.rows.push_back(
      upper_row("final_test_mse", final_mse, 0.0234, 0.5, "derived"));
  rep.rows.push_back(
      lower_row("eta_final_gt_sigma2", final_eta, sigma * sigma, "paper"));

  Json series;
  series["eta"] = eta_series;
  series["test_mse"] = mse_series;
  series["train_loss"] = res.loss_trace;
  rep.extra["series"] = std::move(series);
  rep.extra["eta_trace_rows"] = res.eta_trace.rows();
  rep.notes.push_back(
      "targets 0.0859 and 0.0234 are the isotropic multiplier and the ZED "
      "risk for the two-deltas prior at sigma=0.25");

  if (!cfg.out_dir().empty()) {
    Json side;
    side["family"] = "unsure";
    side["eta_trace"] = eta_series;
    side["seed"] = cfg.seed();
    save_checkpoint(
        (std::filesystem::path(cfg.out_dir()) / "train_denoiser_net").string(),
        res.net, side);
  }
  return rep;
}

RunReport exp_train_score_plugin(const ExperimentConfig& cfg) {
  RunReport rep;
  const int n = cfg.integer("n", 1);
  const double sigma = cfg.number("sigma", 0.25);
  const int train_count = cfg.integer("samples", 20000);
  const int test_count = cfg.integer("test_samples", 20000);
  SignalPrior prior = prior_from(cfg, SignalPrior::gaussian(0.0, 1.0));
  NoiseModel noise = NoiseModel::isotropic(sigma);

  Dataset train = sample_measurements(prior, noise, n, train_count,
                                      derive_seed(cfg.seed(), "score_data"),
                                      false);
  Dataset test = sample_measurements(prior, noise, n, test_count,
                                     derive_seed(cfg.seed(), "score_test"),
                                     true);

  ScoreTrainConfig stc;
  stc.epochs = cfg.integer("epochs", 240);
  stc.batch = cfg.integer("batch", 128);
  stc.theta_step = cfg.number("theta_step", 5e-4);
  stc.theta_step_final = cfg.number("theta_step_final", 1e-5);
  stc.net.residual = false;
  stc.net.gain = cfg.number("gain", 0.3);
  stc.seed = derive_seed(cfg.seed(), "score_train");
  AnnealSchedule sch;
  sch.delta_max = cfg.number("delta_max", 0.1);
  sch.delta_min = cfg.number("delta_min", 0.03);

  ScoreTrainResult res = train_score(train, sch, stc);
  auto net = std::make_shared<const DenoiserNet>(std::move(res.net));
  ScoreField field = score_field_from_net(net);

  // Least-squares slope through the origin on a fixed grid.
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 100; ++i) {
    double y = -3.0 + 6.0 * i / 99.0;
    Vec yy = Vec::Constant(n, y);
    double s = field(yy)[0];
    num += y * s;
    den += y * y;
  }
  double slope = num / den;
  double slope_target = -1.0 / (sigma * sigma + 1.0);
  rep.rows.push_back(rel_row("score_slope", slope, slope_target, 0.10,
                             "derived"));

  Estimator est = plugin_inference(field, train, NoiseFamily::isotropic, 0);
  const auto* zed = std::get_if<Estimator::Zed>(&est.variant());
  double eta_hat = zed ? zed->multipliers.scalar() : 0.0;
  rep.rows.push_back(
      rel_row("eta_hat", eta_hat, sigma * sigma + 1.0, 0.15, "derived"));

  double out_sq = 0.0, in_sq = 0.0;
  for (int k = 0; k < test.count(); ++k) {
    const Vec y = test.samples.row(k).transpose();
    out_sq += est(y).squaredNorm();
    in_sq += y.squaredNorm();
  }
  double ratio = std::sqrt(out_sq / in_sq);
  MetricRow rr{"output_norm_ratio", ratio, 0.15, 0.0, false, "paper"};
  rr.pass = ratio <= 0.15;
  rep.rows.push_back(rr);

  rep.rows.push_back(
      rel_row("plugin_test_mse", empirical_risk(est, test), 1.0, 0.15,
              "paper"));
  rep.extra["ardae_loss"] = res.loss_trace;
  rep.notes.push_back(
      "for the unit Gaussian prior the ZED optimum is the trivial zero guess, "
      "so the plug-in estimator's output norm collapses");
  return rep;
}

RunReport exp_inverse_demo(const ExperimentConfig& cfg) {
  RunReport rep;
  const int n = cfg.integer("n", 8);
  Rng rng = substream(cfg.seed(), "inverse_demo");

  LinearOperator mask = LinearOperator::mask(n, {0, 2, 3, 5, 6, 7});
  auto mask_pinv = std::make_shared<Pseudoinverse>(mask);
  double proj_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    Vec v = draw_normal_vec(rng, n);
    Vec pv = mask_pinv->apply(mask.apply(v));
    Vec ppv = mask_pinv->apply(mask.apply(pv));
    proj_gap = std::max(proj_gap, (ppv - pv).cwiseAbs().maxCoeff());
  }
  rep.rows.push_back(abs_row("mask_projector_gap", proj_gap, 0.0, 1e-8,
                             "trivial"));

  Mat A(5, n);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = draw_normal(rng);
  LinearOperator dense = LinearOperator::dense(A);
  Pseudoinverse dense_pinv(dense);
  double eproj_gap = 0.0, cons_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    Vec v = draw_normal_vec(rng, n);
    Vec pv = dense_pinv.apply(dense.apply(v));
    Vec ppv = dense_pinv.apply(dense.apply(pv));
    eproj_gap = std::max(eproj_gap, (ppv - pv).cwiseAbs().maxCoeff());
    Vec lhs = dense.apply(dense_pinv.apply(dense.apply(v)));
    cons_gap = std::max(cons_gap,
                        (lhs - dense.apply(v)).cwiseAbs().maxCoeff());
  }
  rep.rows.push_back(abs_row("explicit_projector_gap", eproj_gap, 0.0, 1e-8,
                             "trivial"));
  rep.rows.push_back(abs_row("pinv_consistency_gap", cons_gap, 0.0, 1e-6,
                             "trivial"));

  // Blur pseudoinverse consistency with a spectral zero present.
  Vec kernel(3);
  kernel << 0.25, 0.5, 0.25;
  LinearOperator blur = LinearOperator::circulant_blur(n, kernel);
  Pseudoinverse blur_pinv(blur);
  double blur_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    Vec v = draw_normal_vec(rng, n);
    Vec lhs = blur.apply(blur_pinv.apply(blur.apply(v)));
    blur_gap = std::max(blur_gap, (lhs - blur.apply(v)).cwiseAbs().maxCoeff());
  }
  rep.rows.push_back(abs_row("blur_consistency_gap", blur_gap, 0.0, 1e-6,
                             "trivial"));

  // General loss with A = I reduces to the plain loss bit for bit.
  {
    auto id_pinv = Pseudoinverse(LinearOperator::identity(n));
    DenoiserNet small(n, n, NetConfig{.hidden = {8}, .residual = true},
                      derive_seed(cfg.seed(), "demo_net"));
    auto f = [&](const Vec& y) -> Vec { return small(y); };
    Rng prng = substream(cfg.seed(), "demo_probes");
    double max_gap = 0.0;
    for (int t = 0; t < 20; ++t) {
      Vec y = draw_normal_vec(prng, n);
      DivergenceProbe probe = DivergenceProbe::draw(prng, n);
      LossValue a_ = unsure_loss(f, y, 0.123, probe);
      LossValue b_ = general_unsure_loss(f, y, id_pinv, 0.123, probe);
      bool same = a_.total == b_.total && a_.residual == b_.residual &&
                  a_.divergence_term == b_.divergence_term;
      if (!same) max_gap = std::max(max_gap, 1.0);
    }
    MetricRow row{"identity_reduction_exact", max_gap, 0.0, 0.0, false,
                  "trivial"};
    row.pass = max_gap == 0.0;
    rep.rows.push_back(row);
  }

  // Desk-scale general-UNSURE training on the masked problem.
  {
    const double sigma = cfg.number("sigma", 0.25);
    const int count = cfg.integer("samples", 400);
    SignalPrior prior = prior_from(cfg, SignalPrior::gaussian(0.0, 1.0));
    Rng drng = substream(cfg.seed(), "demo_data");
    std::normal_distribution<double> n01(0.0, 1.0);
    const int m = mask.rows();
    Dataset data;
    data.samples = Mat(count, m);
    Mat gt(count, n);
    for (int k = 0; k < count; ++k) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = prior.sample(drng);
      Vec y = mask.apply(x);
      for (int i = 0; i < m; ++i) y[i] += sigma * n01(drng);
      data.samples.row(k) = y.transpose();
      gt.row(k) = x.transpose();
    }
    data.ground_truth = gt;

    FamilySpec fam;
    fam.tag = LossFamily::general;
    fam.pinv = mask_pinv;
    SaddleConfig sc;
    sc.epochs = cfg.integer("epochs", 40);
    sc.net.hidden = {32, 32};
    sc.net.residual = false;
    sc.seed = derive_seed(cfg.seed(), "demo_train");
    SaddleResult res = train_unsure(data, fam, sc);

    rep.rows.push_back(lower_row("demo_final_eta", res.eta[0], 0.0, "derived"));
    double mse = 0.0;
    for (int k = 0; k < count; ++k) {
      const Vec y = data.samples.row(k).transpose();
      mse += (res.net(y) - gt.row(k).transpose()).squaredNorm();
    }
    mse /= count * n;
    MetricRow row{"demo_recon_mse", mse, 1.0, 0.0, false, "derived"};
    row.pass = std::isfinite(mse) && mse <= 1.0;
    rep.rows.push_back(row);
  }
  rep.notes.push_back(
      "mask keeps 6 of 8 pixels; unobserved pixels stay at the prior mean, "
      "observed ones are denoised through the range-space loss");
  return rep;
}

}  // namespace

RunReport run(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  if (!cfg.out_dir().empty())
    std::filesystem::create_directories(cfg.out_dir());
  RunReport rep;
  const std::string& name = cfg.experiment();
  if (name == "table_appc") {
    rep = exp_table_appc(cfg);
  } else if (name == "prop2_sweep") {
    rep = exp_prop2_sweep(cfg);
  } else if (name == "solver_suite") {
    rep = exp_solver_suite(cfg);
  } else if (name == "train_denoiser") {
    rep = exp_train_denoiser(cfg);
  } else if (name == "train_score_plugin") {
    rep = exp_train_score_plugin(cfg);
  } else if (name == "inverse_demo") {
    rep = exp_inverse_demo(cfg);
  } else {
    fail(ErrorCode::config_error, "unknown experiment: " + name);
  }
  rep.experiment = name;
  rep.seed = cfg.seed();
  rep.config = cfg.raw();
  {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      fnv64(name + "#" + std::to_string(cfg.seed()) + "#" +
                            cfg.raw().dump())));
    rep.run_id = buf;
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!cfg.out_dir().empty()) write_report(rep, cfg.out_dir());
  return rep;
}

}  // namespace unsure

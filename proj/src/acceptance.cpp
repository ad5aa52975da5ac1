#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "unsure/harness.hpp"

namespace unsure {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ExperimentConfig make_cfg(const std::string& name, std::uint64_t seed) {
  Json j;
  j["experiment"] = name;
  j["seed"] = seed;
  return ExperimentConfig::from_json(std::move(j));
}

const MetricRow* find_row(const RunReport& rep, const std::string& name) {
  for (const auto& r : rep.rows)
    if (r.metric == name) return &r;
  return nullptr;
}

bool rows_pass(const RunReport& rep, const std::string& prefix) {
  bool ok = true;
  for (const auto& r : rep.rows)
    if (r.metric.rfind(prefix, 0) == 0) ok = ok && r.pass;
  return ok;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  double mean = acc / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size();
  return {mean, std::sqrt(var / xs.size())};
}

struct CritLog {
  std::vector<MetricRow> rows;
  int failures = 0;

  void add(std::ostream& log, int index, const std::string& name,
           MetricRow row, double secs, const std::string& detail) {
    char head[8];
    std::snprintf(head, sizeof(head), "%02d", index);
    log << (row.pass ? "[PASS]" : "[FAIL]") << " criterion " << head << " "
        << name << ": " << detail << " [" << format_double(secs) << "s]\n";
    if (!row.pass) ++failures;
    rows.push_back(std::move(row));
  }
};

}  // namespace

AcceptanceResult run_acceptance(const std::string& out_dir, std::uint64_t seed,
                                std::ostream& log) {
  CritLog acc;
  std::string table_csv, solver_csv;

  // 1. Risk table reproduction: MMSE / trivial-guess / ZED risks for the
  // three priors at sigma = 0.25, each within 10% of the published values.
  {
    auto t0 = Clock::now();
    RunReport rep = run(make_cfg("table_appc", seed));
    table_csv = report_csv(rep);
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : rep.rows) {
      if (r.metric.rfind("omega_", 0) == 0) {
        ok = ok && r.pass;
        continue;
      }
      double rel = std::abs(r.value - r.target) / std::abs(r.target);
      worst = std::max(worst, rel);
      ok = ok && r.pass;
    }
    double secs = seconds_since(t0);
    ok = ok && secs < 60.0;
    acc.add(log, 1, "table_appc", {"crit01_table_appc", worst, 0.10, 0.0, ok,
                                   "paper"},
            secs, "max rel err " + format_double(worst) + " (limit 0.1)");
  }

  // 2 + 3. Risk formula sweep and multiplier identity chain share one run.
  RunReport prop2 = [&] {
    auto t0 = Clock::now();
    RunReport rep = run(make_cfg("prop2_sweep", seed));
    double gap = find_row(rep, "max_rel_gap")->value;
    bool ok = rows_pass(rep, "zed_risk_") && seconds_since(t0) < 120.0;
    acc.add(log, 2, "prop2_sweep", {"crit02_prop2_sweep", gap, 0.03, 0.0, ok,
                                    "paper"},
            seconds_since(t0),
            "max rel gap " + format_double(gap) + " (limit 0.03)");
    return rep;
  }();
  {
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : prop2.rows) {
      if (r.metric.rfind("chain_gap_", 0) != 0) continue;
      worst = std::max(worst, r.value);
      ok = ok && r.pass;
    }
    acc.add(log, 3, "identity_chain", {"crit03_identity_chain", worst, 1e-4,
                                       0.0, ok, "derived"},
            0.0, "max abs gap " + format_double(worst) + " (limit 1e-4)");
  }

  // 4. Multiplier solvers vs independent maximization oracles.
  {
    auto t0 = Clock::now();
    RunReport rep = run(make_cfg("solver_suite", seed));
    solver_csv = report_csv(rep);
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : rep.rows) {
      double tol = r.tolerance > 0 ? r.tolerance : 1.0;
      worst = std::max(worst, std::max(0.0, r.value / tol));
      ok = ok && r.pass;
    }
    double secs = seconds_since(t0);
    ok = ok && secs < 30.0;
    acc.add(log, 4, "solver_suite", {"crit04_solver_suite", worst, 1.0, 0.0,
                                     ok, "derived"},
            secs, "max gap/tolerance " + format_double(worst));
  }

  // 5. Zero expected divergence of the solved estimators, finite-difference
  // divergence averaged over fresh draws for three noise structures.
  {
    auto t0 = Clock::now();
    const int n = 8, draws = 10000;
    double worst = 0.0;
    bool ok = true;

    auto check = [&](const Estimator& est, auto&& draw_y, Rng& rng) {
      auto f = [&](const Vec& y) { return est(y); };
      std::vector<double> divs;
      divs.reserve(draws);
      for (int k = 0; k < draws; ++k) divs.push_back(fd_divergence(f, draw_y(rng)));
      MeanSe ms = mean_se(divs);
      double bound = std::max(4.0 * ms.se, 1e-8);
      worst = std::max(worst, std::abs(ms.mean) / bound);
      ok = ok && std::abs(ms.mean) <= bound;
    };

    {
      SignalPrior prior = SignalPrior::two_deltas(0.5);
      NoisyMarginal marg(prior, 0.25);
      MultiplierSolution sol;
      sol.kind = MultiplierKind::isotropic;
      sol.eta = Vec::Constant(1, 1.0 / marg.expected_score_sq());
      Estimator est = Estimator::zed(ScoreField::analytic(marg), sol,
                                     NoiseFamily::isotropic);
      Rng rng = substream(seed, "c5_iso");
      std::normal_distribution<double> n01(0.0, 1.0);
      check(est,
            [&](Rng& r) {
              Vec y(n);
              for (int i = 0; i < n; ++i)
                y[i] = prior.sample(r) + 0.25 * n01(r);
              return y;
            },
            rng);
    }
    {
      SignalPrior prior = SignalPrior::two_deltas(0.5);
      std::vector<NoisyMarginal> margs;
      Vec etas(n), sigmas(n);
      for (int i = 0; i < n; ++i) {
        sigmas[i] = 0.15 + 0.25 * i / (n - 1.0);
        margs.emplace_back(prior, sigmas[i]);
        etas[i] = 1.0 / margs.back().expected_score_sq();
      }
      MultiplierSolution sol;
      sol.kind = MultiplierKind::diagonal;
      sol.eta = etas;
      Estimator est = Estimator::zed(ScoreField::analytic_per_pixel(margs), sol,
                                     NoiseFamily::diagonal);
      Rng rng = substream(seed, "c5_diag");
      std::normal_distribution<double> n01(0.0, 1.0);
      check(est,
            [&](Rng& r) {
              Vec y(n);
              for (int i = 0; i < n; ++i)
                y[i] = prior.sample(r) + sigmas[i] * n01(r);
              return y;
            },
            rng);
    }
    {
      // y ~ N(0, C) with circulant C = I + K K^T; the exact score -C^{-1} y
      // is genuinely cross-pixel, so every lag of the kernel is active.
      const int r = 2;
      Vec kc(3);
      kc << 0.25, 0.6, 0.15;
      Mat K = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int l = -1; l <= 1; ++l) K(i, (i + l + n) % n) += kc[l + 1];
      Mat C = Mat::Identity(n, n) + K * K.transpose();
      Mat Cinv = C.inverse();
      Eigen::LLT<Mat> llt(C);
      Mat L = llt.matrixL();

      ScoreMoments m;
      m.n = n;
      m.sample_count = 1;
      m.radius = r;
      m.H = Cinv;
      m.trace_H = Cinv.trace();
      m.autocorr = Vec(2 * r + 1);
      for (int lag = -r; lag <= r; ++lag)
        m.autocorr[lag + r] = Cinv(0, (lag + n) % n);
      m.pg = Mat::Zero(3, 3);
      MultiplierSolution sol = solve_circulant(m, r);
      Estimator est = Estimator::zed(
          ScoreField::learned([Cinv](const Vec& y) -> Vec { return -(Cinv * y); }),
          sol, NoiseFamily::circulant);
      Rng rng = substream(seed, "c5_circ");
      check(est, [&](Rng& rr) { return Vec(L * draw_normal_vec(rr, n)); }, rng);
    }

    acc.add(log, 5, "zero_divergence", {"crit05_zero_divergence", worst, 1.0,
                                        0.0, ok, "derived"},
            seconds_since(t0),
            "max |mean div|/bound " + format_double(worst));
  }

  // 6. SURE unbiasedness: the SURE estimate of the exact posterior-mean risk
  // matches the supervised risk on shared samples within 2%.
  {
    auto t0 = Clock::now();
    const int n = 8, N = 60000;
    const double sigma = 0.25, s2 = sigma * sigma;
    double worst = 0.0;
    bool ok = true;
    struct Case {
      const char* name;
      SignalPrior prior;
    };
    Case cases[] = {{"td", SignalPrior::two_deltas(0.5)},
                    {"gauss", SignalPrior::gaussian(0.0, 1.0)},
                    {"ss", SignalPrior::spike_slab()}};
    for (const auto& c : cases) {
      NoisyMarginal marg(c.prior, sigma);
      Estimator mm = Estimator::mmse(marg);
      auto fmap = [&](const Vec& y) { return mm(y); };
      Dataset data = sample_measurements(
          c.prior, NoiseModel::isotropic(sigma), n, N,
          derive_seed(seed, std::string("c6_") + c.name), true);
      Rng prng = substream(seed, std::string("c6_probe_") + c.name);
      double sure_acc = 0.0, sup_acc = 0.0;
      for (int k = 0; k < N; ++k) {
        const Vec y = data.samples.row(k).transpose();
        const Vec x = data.ground_truth->row(k).transpose();
        DivergenceProbe probe = DivergenceProbe::draw(prng, n);
        LossValue lv = sure_loss(fmap, y, s2, probe);
        sure_acc += lv.total + lv.constant;
        sup_acc += (mm(y) - x).squaredNorm();
      }
      double sure_risk = sure_acc / (double(N) * n);
      double sup_risk = sup_acc / (double(N) * n);
      double rel = std::abs(sure_risk - sup_risk) / sup_risk;
      worst = std::max(worst, rel);
      ok = ok && rel <= 0.02;
    }
    acc.add(log, 6, "sure_unbiased", {"crit06_sure_unbiased", worst, 0.02, 0.0,
                                      ok, "derived"},
            seconds_since(t0),
            "max rel gap " + format_double(worst) + " (limit 0.02)");
  }

  // 7. Monte-Carlo divergence on random linear maps: the probe average must
  // sit within three standard errors of the exact trace.
  {
    auto t0 = Clock::now();
    const int n = 6, K = 10000;
    double worst = 0.0;
    bool ok = true;
    Rng mrng = substream(seed, "c7_maps");
    for (int map = 0; map < 20; ++map) {
      Mat A(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = draw_normal(mrng);
      Vec c = draw_normal_vec(mrng, n);
      Vec y0 = draw_normal_vec(mrng, n);
      auto f = [&](const Vec& y) -> Vec { return A * y + c; };
      Rng prng = substream(seed, "c7_probes", map);
      std::vector<double> ests;
      ests.reserve(K);
      for (int k = 0; k < K; ++k) {
        DivergenceProbe probe = DivergenceProbe::draw(prng, n);
        ests.push_back(mc_divergence(f, y0, probe));
      }
      MeanSe ms = mean_se(ests);
      double z = std::abs(ms.mean - A.trace()) / (3.0 * ms.se);
      worst = std::max(worst, z);
      ok = ok && z <= 1.0;
    }
    acc.add(log, 7, "mc_divergence", {"crit07_mc_divergence", worst, 1.0, 0.0,
                                      ok, "derived"},
            seconds_since(t0),
            "max |mean - trace|/(3 se) " + format_double(worst));
  }

  // 8. Family reductions are bitwise: PG(gamma=0), Hudson(a=1),
  // C-UNSURE(r=0) and General(A=I) reproduce plain UNSURE exactly.
  {
    auto t0 = Clock::now();
    const int n = 8;
    const double eta = 0.123;
    DenoiserNet net(n, n, NetConfig{.hidden = {8}, .residual = true},
                    derive_seed(seed, "c8_net"));
    auto f = [&](const Vec& y) -> Vec { return net(y); };
    Pseudoinverse idp(LinearOperator::identity(n));
    Rng rng = substream(seed, "c8");
    int mismatches = 0;
    for (int t = 0; t < 20; ++t) {
      Vec y = draw_normal_vec(rng, n);
      DivergenceProbe probe = DivergenceProbe::draw(rng, n);
      LossValue base = unsure_loss(f, y, eta, probe);
      LossValue alts[4] = {
          pg_unsure_loss(f, y, eta, 0.0, probe),
          hudson_loss(f, y, eta, [](double) { return 1.0; }, probe),
          c_unsure_loss(f, y, Vec::Constant(1, eta), probe),
          general_unsure_loss(f, y, idp, eta, probe)};
      for (const auto& alt : alts) {
        bool same = alt.total == base.total && alt.residual == base.residual &&
                    alt.divergence_term == base.divergence_term;
        if (!same) ++mismatches;
      }
    }
    acc.add(log, 8, "family_reduction", {"crit08_family_reduction",
                                         double(mismatches), 0.0, 0.0,
                                         mismatches == 0, "trivial"},
            seconds_since(t0),
            std::to_string(mismatches) + " bitwise mismatches over 80 checks");
  }

  // 9. End-to-end saddle training on the two-deltas denoising problem.
  {
    auto t0 = Clock::now();
    RunReport rep = run(make_cfg("train_denoiser", seed));
    int bad = 0;
    for (const auto& r : rep.rows) bad += r.pass ? 0 : 1;
    double secs = seconds_since(t0);
    bool ok = bad == 0 && secs < 300.0;
    double eta = find_row(rep, "final_eta")->value;
    double mse = find_row(rep, "final_test_mse")->value;
    acc.add(log, 9, "train_denoiser", {"crit09_train_denoiser", double(bad),
                                       0.0, 0.0, ok, "derived"},
            secs, "eta " + format_double(eta) + ", test mse " +
                      format_double(mse) + ", " + std::to_string(bad) +
                      " failing rows");
  }

  // 10. Score matching + plug-in multiplier on the unit Gaussian prior.
  {
    auto t0 = Clock::now();
    RunReport rep = run(make_cfg("train_score_plugin", seed));
    const MetricRow* slope = find_row(rep, "score_slope");
    const MetricRow* ratio = find_row(rep, "output_norm_ratio");
    bool ok = slope->pass && ratio->pass;
    int bad = (slope->pass ? 0 : 1) + (ratio->pass ? 0 : 1);
    acc.add(log, 10, "score_plugin", {"crit10_score_plugin", double(bad), 0.0,
                                      0.0, ok, "derived"},
            seconds_since(t0),
            "slope " + format_double(slope->value) + ", output/input norm " +
                format_double(ratio->value));
  }

  // 11. Reverse-mode theta gradients match central finite differences.
  {
    auto t0 = Clock::now();
    double worst = 0.0;
    bool ok = true;
    for (int i = 0; i < 5; ++i) {
      FamilySpec fam;
      Vec eta;
      int n_in = 5, n_out = 5;
      NetConfig nc;
      nc.hidden = {6};
      nc.residual = true;
      switch (i) {
        case 0:
          fam.tag = LossFamily::unsure;
          eta = Vec::Constant(1, 0.2);
          break;
        case 1:
          fam.tag = LossFamily::c_unsure;
          fam.radius = 1;
          eta = Vec(3);
          eta << 0.05, 0.2, 0.05;
          break;
        case 2:
          fam.tag = LossFamily::pg_unsure;
          eta = Vec(2);
          eta << 0.3, 0.1;
          break;
        case 3:
          fam.tag = LossFamily::hudson;
          fam.a = [](double y) { return 1.0 / (1.0 + y * y); };
          fam.a_prime = [](double y) {
            double d = 1.0 + y * y;
            return -2.0 * y / (d * d);
          };
          eta = Vec::Constant(1, 0.4);
          break;
        case 4:
          fam.tag = LossFamily::general;
          fam.pinv = std::make_shared<Pseudoinverse>(
              LinearOperator::mask(5, {0, 1, 3, 4}));
          eta = Vec::Constant(1, 0.2);
          n_in = 4;
          nc.residual = false;
          break;
      }
      DenoiserNet net(n_in, n_out, nc, derive_seed(seed, "c11_net", i));
      Rng rng = substream(seed, "c11", i);
      net.set_theta(Vec(0.4 * draw_normal_vec(rng, net.param_count())));
      Vec y = draw_normal_vec(rng, n_in);
      DivergenceProbe probe = DivergenceProbe::draw(rng, n_in);

      auto [loss, g_ad] = loss_and_theta_grad(net, fam, eta, y, probe);
      (void)loss;
      Vec theta = net.theta();
      Vec g_fd(theta.size());
      DenoiserNet scratch = net;
      for (int p = 0; p < theta.size(); ++p) {
        double h = 1e-5 * std::max(1.0, std::abs(theta[p]));
        Vec tp = theta, tm = theta;
        tp[p] += h;
        tm[p] -= h;
        scratch.set_theta(tp);
        double lp = loss_and_theta_grad(scratch, fam, eta, y, probe).first;
        scratch.set_theta(tm);
        double lm = loss_and_theta_grad(scratch, fam, eta, y, probe).first;
        g_fd[p] = (lp - lm) / (2.0 * h);
      }
      double rel = (g_ad - g_fd).cwiseAbs().maxCoeff() /
                   std::max(g_fd.cwiseAbs().maxCoeff(), 1e-12);
      worst = std::max(worst, rel);
      ok = ok && rel <= 1e-4;
    }
    acc.add(log, 11, "gradcheck", {"crit11_gradcheck", worst, 1e-4, 0.0, ok,
                                   "derived"},
            seconds_since(t0),
            "max rel err " + format_double(worst) + " (limit 1e-4)");
  }

  // 12. Determinism: rerunning the table and solver experiments at the same
  // master seed reproduces the reports byte for byte.
  {
    auto t0 = Clock::now();
    std::string table2 = report_csv(run(make_cfg("table_appc", seed)));
    std::string solver2 = report_csv(run(make_cfg("solver_suite", seed)));
    int bad = (table2 == table_csv ? 0 : 1) + (solver2 == solver_csv ? 0 : 1);
    acc.add(log, 12, "determinism", {"crit12_determinism", double(bad), 0.0,
                                     0.0, bad == 0, "trivial"},
            seconds_since(t0),
            std::to_string(bad) + " report mismatches on rerun");
  }

  if (!out_dir.empty()) {
    RunReport rep;
    rep.experiment = "acceptance";
    rep.seed = seed;
    rep.rows = acc.rows;
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(std::filesystem::path(out_dir) / "acceptance.csv");
    csv << report_csv(rep);
  }
  log << (acc.failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << " ("
      << (12 - acc.failures) << "/12 criteria)\n";
  return {acc.rows, acc.failures};
}

}  // namespace unsure

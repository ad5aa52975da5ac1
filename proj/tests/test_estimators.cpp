#include <doctest.h>

#include "unsure/estimators.hpp"

using namespace unsure;

TEST_CASE("closed-form risk of the zero-divergence estimator") {
  CHECK(zed_mse_from_mmse(0.0625, 0.0171493522) ==
        doctest::Approx(0.0236343815).epsilon(1e-6));
  CHECK(zed_mse_from_mmse(0.0625, 0.0588235294117647) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(zed_mse_from_mmse(0.0625, 0.0426934375) ==
        doctest::Approx(0.1347199870).epsilon(1e-6));

  // The geometric series truncation converges to the closed form.
  CHECK(zed_mse_series(0.0625, 0.0171493522, 40) ==
        doctest::Approx(zed_mse_from_mmse(0.0625, 0.0171493522))
            .epsilon(1e-9));

  CHECK_THROWS_AS(zed_mse_from_mmse(0.0625, 0.07), const Error&);
}

TEST_CASE("combination weight is at least one for every mixture prior") {
  for (const SignalPrior& prior :
       {SignalPrior::two_deltas(0.5), SignalPrior::gaussian(0.0, 1.0),
        SignalPrior::spike_slab()}) {
    for (double sigma : {0.05, 0.1, 0.25, 0.5}) {
      NoisyMarginal marg(prior, sigma);
      double omega = omega_analytic(marg);
      CHECK(omega >= 1.0 - 1e-9);
    }
  }
  // Gaussian prior: omega = (sigma^2 + var) / sigma^2 exactly.
  NoisyMarginal gs(SignalPrior::gaussian(0.0, 1.0), 0.25);
  CHECK(omega_analytic(gs) == doctest::Approx(17.0).epsilon(1e-9));
}

TEST_CASE("posterior-mean estimator and trivial guess at frozen risks") {
  SignalPrior prior = SignalPrior::two_deltas(0.5);
  NoisyMarginal marg(prior, 0.25);
  Dataset data = sample_measurements(prior, NoiseModel::isotropic(0.25), 1,
                                     40000, 321, true);

  double mmse_risk = empirical_risk(Estimator::mmse(marg), data);
  CHECK(mmse_risk == doctest::Approx(0.0171493522).epsilon(0.05));

  double cv_risk = empirical_risk(Estimator::cv(prior), data);
  CHECK(cv_risk == doctest::Approx(0.25).epsilon(0.03));

  Dataset no_gt = sample_measurements(prior, NoiseModel::isotropic(0.25), 1,
                                      10, 5, false);
  CHECK_THROWS_AS(empirical_risk(Estimator::cv(prior), no_gt), const Error&);
}

TEST_CASE("zed estimator equals the mmse/identity combination") {
  SignalPrior prior = SignalPrior::two_deltas(0.5);
  NoisyMarginal marg(prior, 0.25);
  double omega = omega_analytic(marg);

  ScoreMoments m = analytic_moments(marg, 4, 0);
  MultiplierSolution sol = solve_isotropic(m, 4);
  Estimator zed = Estimator::zed(ScoreField::analytic(marg), sol,
                                 NoiseFamily::isotropic);
  Estimator comb = zed_from_mmse(Estimator::mmse(marg), omega);

  Rng rng = make_rng(4);
  for (int t = 0; t < 10; ++t) {
    Vec y = 0.8 * draw_normal_vec(rng, 4);
    CHECK((zed(y) - comb(y)).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("circulant multiplier application follows the shift convention") {
  // s(y) returns a fixed vector so the applied kernel is easy to read off.
  Vec s_fixed(4);
  s_fixed << 1.0, 2.0, 3.0, 4.0;
  ScoreField field =
      ScoreField::learned([s_fixed](const Vec&) { return s_fixed; });
  MultiplierSolution sol;
  sol.kind = MultiplierKind::circulant;
  sol.radius = 1;
  sol.eta = Vec(3);
  sol.eta << 0.25, 0.5, 0.125;  // lags -1, 0, +1

  Estimator zed = Estimator::zed(field, sol, NoiseFamily::circulant);
  Vec y = Vec::Zero(4);
  Vec out = zed(y);
  // (Sigma_eta s)_i = sum_lag eta[lag] s[(i + lag) mod 4].
  Vec expect(4);
  for (int i = 0; i < 4; ++i) {
    expect[i] = 0.25 * s_fixed[(i - 1 + 4) % 4] + 0.5 * s_fixed[i] +
                0.125 * s_fixed[(i + 1) % 4];
  }
  CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("hudson estimator is invariant to scaling the weight") {
  SignalPrior prior = SignalPrior::gaussian(0.0, 1.0);
  NoisyMarginal marg(prior, 0.3);
  ScoreField field = ScoreField::analytic(marg);
  Dataset data = sample_measurements(prior, NoiseModel::isotropic(0.3), 4, 200,
                                     21, false);

  auto a1 = [](double) { return 1.0; };
  auto a2 = [](double) { return 3.7; };
  MultiplierSolution s1 = solve_hudson(field, data, a1);
  MultiplierSolution s2 = solve_hudson(field, data, a2);
  Estimator e1 = Estimator::zed_hudson(field, s1, a1);
  Estimator e2 = Estimator::zed_hudson(field, s2, a2);

  Rng rng = make_rng(9);
  for (int t = 0; t < 5; ++t) {
    Vec y = draw_normal_vec(rng, 4);
    CHECK((e1(y) - e2(y)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("empirical combination weight approaches the analytic one") {
  SignalPrior prior = SignalPrior::two_deltas(0.5);
  NoisyMarginal marg(prior, 0.25);
  Dataset data = sample_measurements(prior, NoiseModel::isotropic(0.25), 2,
                                     20000, 77, true);
  double om = omega_empirical(Estimator::mmse(marg), data, 0.0625);
  CHECK(om == doctest::Approx(omega_analytic(marg)).epsilon(0.05));
}

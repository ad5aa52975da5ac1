#include <doctest.h>

#include "unsure/models.hpp"

using namespace unsure;

TEST_CASE("marginal density and score at frozen reference points") {
  NoisyMarginal td(SignalPrior::two_deltas(0.5), 0.25);
  NoisyMarginal gs(SignalPrior::gaussian(0.0, 1.0), 0.25);
  NoisyMarginal ss(SignalPrior::spike_slab(), 0.25);

  CHECK(td.pdf(0.0) == doctest::Approx(0.21596386605275225).epsilon(1e-12));
  CHECK(gs.pdf(0.0) == doctest::Approx(0.38703086132232595).epsilon(1e-12));
  CHECK(ss.pdf(0.0) == doctest::Approx(0.9913999914640284).epsilon(1e-12));

  CHECK(gs.score(0.5) == doctest::Approx(-0.4705882352941176).epsilon(1e-12));
  CHECK(td.score(0.5) == doctest::Approx(-0.00536560208746365).epsilon(1e-9));

  CHECK(td.posterior_mean(0.25) ==
        doctest::Approx(0.48201379003790845).epsilon(1e-10));
  CHECK(gs.posterior_mean(1.0) ==
        doctest::Approx(0.9411764705882353).epsilon(1e-12));

  CHECK(std::exp(td.log_pdf(0.3)) == doctest::Approx(td.pdf(0.3)).epsilon(1e-12));
}

TEST_CASE("marginal quadrature moments at frozen reference values") {
  NoisyMarginal td(SignalPrior::two_deltas(0.5), 0.25);
  NoisyMarginal gs(SignalPrior::gaussian(0.0, 1.0), 0.25);
  NoisyMarginal ss(SignalPrior::spike_slab(), 0.25);

  CHECK(td.mmse() == doctest::Approx(0.0171493522).epsilon(1e-7));
  CHECK(gs.mmse() == doctest::Approx(0.0588235294117647).epsilon(1e-8));
  CHECK(ss.mmse() == doctest::Approx(0.0426934375).epsilon(1e-7));

  CHECK(td.expected_score_sq() == doctest::Approx(11.609766).epsilon(1e-6));
  CHECK(gs.expected_score_sq() ==
        doctest::Approx(0.9411764705882353).epsilon(1e-9));
  CHECK(ss.expected_score_sq() == doctest::Approx(5.070479).epsilon(1e-6));

  // Fisher route to the MMSE agrees with the direct quadrature.
  CHECK(td.mmse_fisher() == doctest::Approx(td.mmse()).epsilon(1e-6));
  CHECK(ss.mmse_fisher() == doctest::Approx(ss.mmse()).epsilon(1e-6));

  // E[y^2] = prior variance + sigma^2.
  double ey2 = td.expect([](double y) { return y * y; });
  CHECK(ey2 == doctest::Approx(0.3125).epsilon(1e-9));
}

TEST_CASE("prior statistics and sampling") {
  SignalPrior td = SignalPrior::two_deltas(0.5);
  CHECK(td.mean() == doctest::Approx(0.0));
  CHECK(td.variance() == doctest::Approx(0.25));

  SignalPrior ss = SignalPrior::spike_slab();
  CHECK(ss.mean() == doctest::Approx(0.0));
  CHECK(ss.variance() == doctest::Approx(0.5));

  Rng rng = make_rng(7);
  double acc = 0.0, acc2 = 0.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    double x = td.sample(rng);
    CHECK(std::abs(x) == doctest::Approx(0.5));
    acc += x;
    acc2 += x * x;
  }
  CHECK(std::abs(acc / N) < 0.02);
  CHECK(acc2 / N == doctest::Approx(0.25));
}

TEST_CASE("noise covariance traces") {
  CHECK(NoiseModel::isotropic(0.25).covariance_trace(8) ==
        doctest::Approx(0.5));
  Vec sig(3);
  sig << 0.1, 0.2, 0.3;
  CHECK(NoiseModel::diagonal(sig).covariance_trace(3) ==
        doctest::Approx(0.14));
  Vec k(3);
  k << 0.25, 0.5, 0.25;
  CHECK(NoiseModel::circulant(k).covariance_trace(8) == doctest::Approx(3.0));
  CHECK_THROWS_AS(
      NoiseModel::poisson_gaussian(0.05, 0.1).covariance_trace(4),
      const Error&);
}

TEST_CASE("measurement sampling is deterministic and keeps ground truth") {
  SignalPrior prior = SignalPrior::two_deltas(0.5);
  NoiseModel noise = NoiseModel::isotropic(0.25);
  Dataset a = sample_measurements(prior, noise, 4, 100, 42, true);
  Dataset b = sample_measurements(prior, noise, 4, 100, 42, true);
  CHECK(a.count() == 100);
  CHECK(a.dim() == 4);
  REQUIRE(a.ground_truth.has_value());
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK((*a.ground_truth - *b.ground_truth).cwiseAbs().maxCoeff() == 0.0);

  Dataset c = sample_measurements(prior, noise, 4, 100, 43, false);
  CHECK(!c.ground_truth.has_value());
  CHECK((c.samples - a.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("poisson-gaussian and exponential-family sampling moments") {
  Rng rng = make_rng(11);
  const int N = 20000;

  NoiseModel pg = NoiseModel::poisson_gaussian(0.05, 0.1);
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < N; ++i) {
    Vec y = add_noise(Vec::Constant(1, 1.0), pg, rng);
    acc += y[0];
    acc2 += y[0] * y[0];
  }
  double mean = acc / N;
  double var = acc2 / N - mean * mean;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(var == doctest::Approx(0.05 * 1.0 + 0.01).epsilon(0.08));

  NoiseModel ef = NoiseModel::exp_family_const(2.0, 0.03);
  acc = acc2 = 0.0;
  for (int i = 0; i < N; ++i) {
    Vec y = add_noise(Vec::Zero(1), ef, rng);
    acc += y[0];
    acc2 += y[0] * y[0];
  }
  mean = acc / N;
  var = acc2 / N - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(0.06).epsilon(0.05));

  NoiseModel ef_fn =
      NoiseModel::exp_family([](double y) { return 1.0 + y * y; }, 0.5);
  CHECK_THROWS_AS(add_noise(Vec::Zero(1), ef_fn, rng), const Error&);
}

TEST_CASE("model json round trips") {
  SignalPrior prior = SignalPrior::spike_slab();
  NoiseModel noise = NoiseModel::isotropic(0.25);
  Json j = model_pair_to_json(prior, noise);
  auto [p2, n2] = model_pair_from_json(j);
  NoisyMarginal a(prior, 0.25), b(p2, 0.25);
  CHECK(a.pdf(0.37) == doctest::Approx(b.pdf(0.37)).epsilon(1e-14));
  CHECK(n2.covariance_trace(4) == doctest::Approx(0.25));

  Vec sig(2);
  sig << 0.1, 0.4;
  Json jd = NoiseModel::diagonal(sig).to_json();
  CHECK(NoiseModel::from_json(jd).covariance_trace(2) ==
        doctest::Approx(0.17));
}

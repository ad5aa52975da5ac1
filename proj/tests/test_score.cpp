#include <doctest.h>

#include "unsure/score.hpp"

using namespace unsure;

TEST_CASE("analytic score field applies the marginal pixelwise") {
  NoisyMarginal marg(SignalPrior::gaussian(0.0, 1.0), 0.25);
  ScoreField field = ScoreField::analytic(marg);
  Vec y(3);
  y << -1.0, 0.0, 0.5;
  Vec s = field(y);
  for (int i = 0; i < 3; ++i)
    CHECK(s[i] == doctest::Approx(marg.score(y[i])).epsilon(1e-14));
}

TEST_CASE("tabulated score interpolates linearly") {
  Vec gy(3), gs(3);
  gy << -1.0, 0.0, 1.0;
  gs << 2.0, 0.0, -2.0;
  ScoreField field = ScoreField::tabulated(gy, gs);
  Vec y(2);
  y << -0.5, 0.25;
  Vec s = field(y);
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("finite-difference divergence is exact on a quadratic map") {
  auto f = [](const Vec& y) -> Vec {
    Vec out(2);
    out[0] = y[0] * y[1];
    out[1] = y[1] * y[1];
    return out;
  };
  Vec y(2);
  y << 0.7, -1.3;
  CHECK(fd_divergence(f, y) == doctest::Approx(3.0 * y[1]).epsilon(1e-8));
}

TEST_CASE("sample moments approach the analytic moments") {
  SignalPrior prior = SignalPrior::two_deltas(0.5);
  NoisyMarginal marg(prior, 0.25);
  const int n = 4;
  Dataset data = sample_measurements(prior, NoiseModel::isotropic(0.25), n,
                                     6000, 99, false);
  ScoreField field = ScoreField::analytic(marg);
  ScoreMoments m = accumulate_moments(field, data, 1);
  ScoreMoments pop = analytic_moments(marg, n, 1);

  CHECK(pop.trace_H == doctest::Approx(n * 11.609766).epsilon(1e-6));
  CHECK(m.trace_H == doctest::Approx(pop.trace_H).epsilon(0.08));
  CHECK(m.n == n);
  CHECK(m.sample_count == 6000);
  CHECK(m.autocorr.size() == 3);
  // Independent pixels: the off-diagonal lag is near zero.
  CHECK(std::abs(m.autocorr[0]) < 0.8);
  CHECK(std::abs(pop.autocorr[0]) < 1e-9);
  CHECK(m.autocorr[1] == doctest::Approx(m.trace_H / n).epsilon(1e-12));

  // H is the mean outer product, so its trace matches trace_H.
  CHECK(m.H.trace() == doctest::Approx(m.trace_H).epsilon(1e-10));

  Json j = m.to_json();
  ScoreMoments m2 = ScoreMoments::from_json(j);
  CHECK(m2.trace_H == doctest::Approx(m.trace_H).epsilon(1e-14));
  CHECK((m2.H - m.H).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(m2.radius == 1);
}

TEST_CASE("poisson-gaussian cross moments accumulate") {
  SignalPrior prior(std::vector<PriorComponent>{
      PriorComponent{1.0, PointMass{1.0}}});
  Dataset data = sample_measurements(
      prior, NoiseModel::poisson_gaussian(0.05, 0.1), 3, 4000, 5, false);
  ScoreField field = ScoreField::learned(
      [](const Vec& y) -> Vec { return -(y.array() - 1.0).matrix(); });
  ScoreMoments m = accumulate_moments(field, data, 0);
  // h_{0,0} counts pixels; h_{1,0} sums E[y_i].
  CHECK(m.pg(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.pg(1, 0) == doctest::Approx(3.0).epsilon(0.05));
  // h_{0,2} = E||s||^2 = sum var(y_i) around 3 * 0.06.
  CHECK(m.pg(0, 2) == doctest::Approx(0.18).epsilon(0.15));
}

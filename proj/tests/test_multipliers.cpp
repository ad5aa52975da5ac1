#include <doctest.h>

#include "unsure/multipliers.hpp"
#include "unsure/oracles.hpp"

using namespace unsure;

namespace {

ScoreMoments circulant_moments(int n, int r, const Vec& centered_autocorr) {
  ScoreMoments m;
  m.n = n;
  m.sample_count = 1;
  m.radius = r;
  m.autocorr = centered_autocorr;
  m.H = Mat(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int d = std::min((j - i + n) % n, (i - j + n) % n);
      REQUIRE(d <= r);
      m.H(i, j) = centered_autocorr[r + d];
    }
  }
  m.trace_H = m.H.trace();
  m.pg = Mat::Zero(3, 3);
  return m;
}

}  // namespace

TEST_CASE("isotropic multiplier matches frozen per-prior values") {
  struct Case {
    SignalPrior prior;
    double eta;
  };
  Case cases[] = {{SignalPrior::two_deltas(0.5), 0.0861344},
                  {SignalPrior::gaussian(0.0, 1.0), 1.0625},
                  {SignalPrior::spike_slab(), 0.19721999}};
  for (const auto& c : cases) {
    NoisyMarginal marg(c.prior, 0.25);
    const int n = 6;
    ScoreMoments m = analytic_moments(marg, n, 0);
    MultiplierSolution sol = solve_isotropic(m, n);
    CHECK(sol.scalar() == doctest::Approx(c.eta).epsilon(1e-5));
  }
}

TEST_CASE("diagonal multipliers invert the per-pixel second moments") {
  ScoreMoments m;
  m.n = 3;
  m.sample_count = 1;
  m.radius = 0;
  m.H = Mat::Zero(3, 3);
  m.H.diagonal() << 2.0, 4.0, 5.0;
  m.trace_H = 11.0;
  m.autocorr = Vec::Constant(1, 11.0 / 3.0);
  m.pg = Mat::Zero(3, 3);
  MultiplierSolution sol = solve_diagonal(m);
  REQUIRE(sol.eta.size() == 3);
  CHECK(sol.eta[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sol.eta[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sol.eta[2] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("circulant solve reproduces the hand-solved kernel") {
  Vec c(3);
  c << 0.25, 1.0, 0.25;
  ScoreMoments m = circulant_moments(3, 1, c);
  MultiplierSolution sol = solve_circulant(m, 1);
  CHECK(sol.eta.size() == 3);
  CHECK(sol.eta[0] == doctest::Approx(-2.0 / 9.0).epsilon(1e-12));
  CHECK(sol.eta[1] == doctest::Approx(10.0 / 9.0).epsilon(1e-12));
  CHECK(sol.eta[2] == doctest::Approx(-2.0 / 9.0).epsilon(1e-12));

  MultiplierSolution direct = solve_circulant_direct(m, 1);
  CHECK((sol.eta - direct.eta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("circulant solve equals the general solve when n = 2r + 1") {
  for (int r : {1, 2}) {
    const int n = 2 * r + 1;
    Vec c(2 * r + 1);
    for (int lag = -r; lag <= r; ++lag)
      c[lag + r] = 2.1 * std::pow(0.3, std::abs(lag));
    ScoreMoments m = circulant_moments(n, r, c);
    MultiplierSolution dft = solve_circulant(m, r);
    MultiplierSolution gen =
        solve_general(m, CovarianceBasis::circulant(n, r));
    CHECK((dft.eta - gen.eta).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("solved multipliers maximize the quadratic objective") {
  Rng rng = make_rng(31);
  const int n = 5;
  Mat R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = draw_normal(rng);
  ScoreMoments m;
  m.n = n;
  m.sample_count = 1;
  m.radius = 0;
  m.H = R * R.transpose() / n + 0.2 * Mat::Identity(n, n);
  m.trace_H = m.H.trace();
  m.autocorr = Vec::Constant(1, m.trace_H / n);
  m.pg = Mat::Zero(3, 3);

  std::vector<Mat> psi;
  for (int k = 0; k < 3; ++k) {
    Mat P(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) P(i, j) = draw_normal(rng);
    psi.push_back(P);
  }
  CovarianceBasis basis = CovarianceBasis::general(psi);
  MultiplierSolution sol = solve_general(m, basis);

  double obj = basis_objective(m, basis, sol.eta);
  for (int t = 0; t < 20; ++t) {
    Vec d = draw_normal_vec(rng, 3);
    d *= 1e-3 / d.norm();
    CHECK(basis_objective(m, basis, Vec(sol.eta + d)) <= obj + 1e-9);
  }

  Vec oracle_eta = oracle::maximize_basis_objective(m, basis, 10, 77);
  CHECK((sol.eta - oracle_eta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("poisson-gaussian closed form hits the constructed stationary point") {
  ScoreMoments m;
  m.n = 1;
  m.sample_count = 1;
  m.radius = 0;
  m.H = Mat::Zero(1, 1);
  m.autocorr = Vec::Zero(1);
  m.pg = Mat::Zero(3, 3);
  m.pg(0, 2) = 2.0;
  m.pg(1, 2) = 0.3;
  m.pg(0, 1) = 0.3;
  m.pg(1, 0) = 0.0;
  m.pg(2, 2) = 1.0;
  m.pg(1, 1) = 0.2;

  MultiplierSolution sol = solve_poisson_gaussian(m, 1);
  REQUIRE(sol.gamma.has_value());
  CHECK(sol.eta[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(*sol.gamma == doctest::Approx(0.0).epsilon(1e-12));

  double obj = pg_objective(m, 1, sol.eta[0], *sol.gamma);
  Rng rng = make_rng(3);
  for (int t = 0; t < 20; ++t) {
    Vec d = draw_normal_vec(rng, 2);
    d *= 1e-3 / d.norm();
    CHECK(pg_objective(m, 1, sol.eta[0] + d[0], *sol.gamma + d[1]) <=
          obj + 1e-9);
  }

  auto [oe, og] = oracle::maximize_pg_objective(m, 1);
  CHECK(oe == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(std::abs(og) < 1e-7);
}

TEST_CASE("hudson multiplier scales inversely with a constant weight") {
  SignalPrior prior = SignalPrior::gaussian(0.0, 1.0);
  NoisyMarginal marg(prior, 0.3);
  Dataset data = sample_measurements(prior, NoiseModel::isotropic(0.3), 4, 200,
                                     21, false);
  ScoreField field = ScoreField::analytic(marg);

  MultiplierSolution one =
      solve_hudson(field, data, [](double) { return 1.0; });
  MultiplierSolution big =
      solve_hudson(field, data, [](double) { return 3.7; });
  CHECK(one.eta[0] == doctest::Approx(3.7 * big.eta[0]).epsilon(1e-9));

  // Against the independent golden-section oracle, with an analytic weight
  // derivative supplied.
  auto a = [](double y) { return 1.0 / (1.0 + y * y); };
  HudsonOptions opts;
  opts.a_prime = [](double y) {
    double d = 1.0 + y * y;
    return -2.0 * y / (d * d);
  };
  MultiplierSolution sol = solve_hudson(field, data, a, opts);
  double ora = oracle::maximize_hudson_objective(field, data, a);
  CHECK(std::abs(sol.eta[0] - ora) < 1e-6);
}

TEST_CASE("degenerate moment matrices are rejected") {
  ScoreMoments m;
  m.n = 2;
  m.sample_count = 1;
  m.radius = 0;
  m.H = Mat::Zero(2, 2);
  m.trace_H = 0.0;
  m.autocorr = Vec::Zero(1);
  m.pg = Mat::Zero(3, 3);
  CHECK_THROWS_AS(solve_isotropic(m, 2), const Error&);

  std::vector<Mat> psi = {Mat::Identity(2, 2), Mat::Identity(2, 2)};
  m.H = Mat::Identity(2, 2);
  m.trace_H = 2.0;
  CHECK_THROWS_AS(solve_general(m, CovarianceBasis::general(psi)),
                  const Error&);
}

TEST_CASE("multiplier solution json round trip") {
  Vec c(3);
  c << 0.25, 1.0, 0.25;
  ScoreMoments m = circulant_moments(3, 1, c);
  MultiplierSolution sol = solve_circulant(m, 1);
  MultiplierSolution back = MultiplierSolution::from_json(sol.to_json());
  CHECK((sol.eta - back.eta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.radius == sol.radius);
  CHECK(back.kind == sol.kind);
}

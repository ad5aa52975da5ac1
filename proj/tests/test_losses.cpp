#include <doctest.h>

#include "unsure/losses.hpp"
#include "unsure/train.hpp"

using namespace unsure;

TEST_CASE("loss decomposition: total = residual + divergence term") {
  Rng rng = make_rng(5);
  const int n = 6;
  DenoiserNet net(n, n, NetConfig{.hidden = {8}, .residual = true}, 17);
  auto f = [&](const Vec& y) -> Vec { return net(y); };
  for (int t = 0; t < 5; ++t) {
    Vec y = draw_normal_vec(rng, n);
    DivergenceProbe probe = DivergenceProbe::draw(rng, n);
    LossValue lv = unsure_loss(f, y, 0.3, probe);
    CHECK(lv.total ==
          doctest::Approx(lv.residual + lv.divergence_term).epsilon(1e-14));
    CHECK(lv.divergence_term ==
          doctest::Approx(2.0 * 0.3 * lv.divergence_raw).epsilon(1e-14));
    CHECK(lv.constant == 0.0);

    LossValue sv = sure_loss(f, y, 0.3, probe);
    CHECK(sv.total == lv.total);
    CHECK(sv.constant == doctest::Approx(-n * 0.3).epsilon(1e-14));
  }
}

TEST_CASE("specialized losses reduce to the plain loss bit for bit") {
  Rng rng = make_rng(6);
  const int n = 8;
  const double eta = 0.123;
  DenoiserNet net(n, n, NetConfig{.hidden = {8}, .residual = true}, 23);
  auto f = [&](const Vec& y) -> Vec { return net(y); };
  Pseudoinverse idp(LinearOperator::identity(n));
  for (int t = 0; t < 20; ++t) {
    Vec y = draw_normal_vec(rng, n);
    DivergenceProbe probe = DivergenceProbe::draw(rng, n);
    LossValue base = unsure_loss(f, y, eta, probe);

    LossValue pg = pg_unsure_loss(f, y, eta, 0.0, probe);
    CHECK(pg.total == base.total);
    CHECK(pg.residual == base.residual);
    CHECK(pg.divergence_term == base.divergence_term);

    LossValue hud = hudson_loss(f, y, eta, [](double) { return 1.0; }, probe);
    CHECK(hud.total == base.total);
    CHECK(hud.divergence_term == base.divergence_term);

    LossValue cu = c_unsure_loss(f, y, Vec::Constant(1, eta), probe);
    CHECK(cu.total == base.total);
    CHECK(cu.divergence_term == base.divergence_term);

    LossValue gen = general_unsure_loss(f, y, idp, eta, probe);
    CHECK(gen.total == base.total);
    CHECK(gen.residual == base.residual);
    CHECK(gen.divergence_term == base.divergence_term);
  }
}

TEST_CASE("probe divergence is unbiased for linear maps") {
  Rng rng = make_rng(7);
  const int n = 5, K = 4000;
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = draw_normal(rng);
  Vec c = draw_normal_vec(rng, n);
  auto f = [&](const Vec& y) -> Vec { return A * y + c; };
  Vec y0 = draw_normal_vec(rng, n);

  double acc = 0.0, acc2 = 0.0;
  for (int k = 0; k < K; ++k) {
    DivergenceProbe probe = DivergenceProbe::draw(rng, n);
    double est = mc_divergence(f, y0, probe);
    acc += est;
    acc2 += est * est;
  }
  double mean = acc / K;
  double se = std::sqrt((acc2 / K - mean * mean) / K);
  CHECK(std::abs(mean - A.trace()) <= 3.0 * se);
}

TEST_CASE("weighted probe divergence targets the weighted trace") {
  Rng rng = make_rng(8);
  const int n = 4, K = 6000;
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = draw_normal(rng);
  auto f = [&](const Vec& y) -> Vec { return A * y; };
  Vec y0 = draw_normal_vec(rng, n);

  Vec d(n);
  d << 0.5, 1.0, 2.0, 0.25;
  Weight w = Weight::diagonal(d);
  double target = (d.asDiagonal() * A).trace();

  double acc = 0.0, acc2 = 0.0;
  for (int k = 0; k < K; ++k) {
    DivergenceProbe probe = DivergenceProbe::draw(rng, n);
    double est = mc_divergence(f, y0, probe, w);
    acc += est;
    acc2 += est * est;
  }
  double mean = acc / K;
  double se = std::sqrt((acc2 / K - mean * mean) / K);
  CHECK(std::abs(mean - target) <= 3.0 * se);
}

TEST_CASE("correlated loss uses the covariance trace as its constant") {
  Rng rng = make_rng(9);
  const int n = 4;
  Mat R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = draw_normal(rng);
  Mat Sigma = R * R.transpose() + 0.1 * Mat::Identity(n, n);
  Weight w = Weight::dense(Sigma);
  w.require_psd(n);

  DenoiserNet net(n, n, NetConfig{.hidden = {6}, .residual = true}, 2);
  auto f = [&](const Vec& y) -> Vec { return net(y); };
  Vec y = draw_normal_vec(rng, n);
  DivergenceProbe probe = DivergenceProbe::draw(rng, n);
  LossValue lv = correlated_sure_loss(f, y, w, probe);
  CHECK(lv.constant == doctest::Approx(-Sigma.trace()).epsilon(1e-12));
  CHECK(lv.total ==
        doctest::Approx(lv.residual + lv.divergence_term).epsilon(1e-12));

  // Identity weight reproduces the unit-variance loss.
  LossValue id = correlated_sure_loss(f, y, Weight::identity(), probe);
  LossValue plain = sure_loss(f, y, 1.0, probe);
  CHECK(id.total == doctest::Approx(plain.total).epsilon(1e-13));
  CHECK(id.constant == doctest::Approx(plain.constant).epsilon(1e-13));
}

TEST_CASE("weights reject non-covariance roles") {
  Vec d(2);
  d << 1.0, -0.5;
  CHECK_THROWS_AS(Weight::diagonal(d).require_psd(2), const Error&);

  Vec k(3);
  k << 0.6, 0.1, 0.6;  // negative spectrum bin
  CHECK_THROWS_AS(Weight::circulant(k).require_psd(4), const Error&);

  Mat M(2, 2);
  M << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(Weight::dense(M).require_psd(2), const Error&);
}

TEST_CASE("denoising-score loss value and stationary slope") {
  // Direct value check.
  auto s = [](const Vec& y) -> Vec { return -0.5 * y; };
  Vec y(2), b(2);
  y << 1.0, -2.0;
  b << 0.5, 0.25;
  double tau = 0.2;
  Vec inner = y + tau * b;
  double expect = (b + tau * Vec(-0.5 * inner)).squaredNorm();
  CHECK(ar_dae_loss(s, y, b, tau) == doctest::Approx(expect).epsilon(1e-14));

  // With tau ~ N(0, delta^2) the quadratic family s_c(y) = c y is minimized
  // at c = -1 / (E[y^2] + 3 delta^2).
  const double delta = 0.3, v0 = 1.0;
  const int N = 40000;
  Rng rng = make_rng(10);
  std::normal_distribution<double> n01(0.0, 1.0);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < N; ++k) {
    double yy = std::sqrt(v0) * n01(rng);
    double bb = n01(rng);
    double tt = delta * n01(rng);
    double z = yy + tt * bb;
    num += tt * z * bb;
    den += tt * tt * z * z;
  }
  double c_hat = -num / den;
  CHECK(c_hat == doctest::Approx(-1.0 / (v0 + 3.0 * delta * delta))
                     .epsilon(0.06));
}

TEST_CASE("probe draws are deterministic given the engine state") {
  Rng a = make_rng(12), b = make_rng(12);
  DivergenceProbe pa = DivergenceProbe::draw(a, 5);
  DivergenceProbe pb = DivergenceProbe::draw(b, 5);
  CHECK((pa.b - pb.b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pa.tau == pb.tau);
}

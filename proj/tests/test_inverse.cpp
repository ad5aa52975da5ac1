#include <doctest.h>

#include "unsure/inverse.hpp"
#include "unsure/losses.hpp"

using namespace unsure;

namespace {

LinearOperator make_dense(int m, int n, Rng& rng) {
  Mat A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = draw_normal(rng);
  return LinearOperator::dense(A);
}

double adjoint_gap(const LinearOperator& op, Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Vec x = draw_normal_vec(rng, op.cols());
    Vec u = draw_normal_vec(rng, op.rows());
    worst = std::max(worst,
                     std::abs(op.apply(x).dot(u) - x.dot(op.adjoint(u))));
  }
  return worst;
}

double consistency_gap(const LinearOperator& op, const Pseudoinverse& pinv,
                       Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Vec x = draw_normal_vec(rng, op.cols());
    Vec lhs = op.apply(pinv.apply(op.apply(x)));
    worst = std::max(worst, (lhs - op.apply(x)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double projector_gap(const LinearOperator& op, const Pseudoinverse& pinv,
                     Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Vec x = draw_normal_vec(rng, op.cols());
    Vec px = pinv.apply(op.apply(x));
    Vec ppx = pinv.apply(op.apply(px));
    worst = std::max(worst, (ppx - px).cwiseAbs().maxCoeff());
  }
  return worst;
}

double transpose_gap(const Pseudoinverse& pinv, Rng& rng) {
  const LinearOperator& op = pinv.op();
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Vec u = draw_normal_vec(rng, op.rows());
    Vec x = draw_normal_vec(rng, op.cols());
    worst = std::max(worst, std::abs(pinv.apply(u).dot(x) -
                                     u.dot(pinv.apply_transpose(x))));
  }
  return worst;
}

}  // namespace

TEST_CASE("operator adjoints satisfy the inner-product identity") {
  Rng rng = make_rng(13);
  CHECK(adjoint_gap(LinearOperator::mask(8, {0, 2, 3, 5, 6, 7}), rng) < 1e-10);
  CHECK(adjoint_gap(make_dense(5, 8, rng), rng) < 1e-10);
  Vec k(3);
  k << 0.25, 0.5, 0.25;
  CHECK(adjoint_gap(LinearOperator::circulant_blur(8, k), rng) < 1e-10);
}

TEST_CASE("pseudoinverse consistency and projector idempotence") {
  Rng rng = make_rng(14);

  LinearOperator mask = LinearOperator::mask(8, {0, 2, 3, 5, 6, 7});
  Pseudoinverse mp(mask);
  CHECK(consistency_gap(mask, mp, rng) < 1e-6);
  CHECK(projector_gap(mask, mp, rng) < 1e-8);

  LinearOperator dense = make_dense(5, 8, rng);
  Pseudoinverse dp(dense);
  CHECK(consistency_gap(dense, dp, rng) < 1e-6);
  CHECK(projector_gap(dense, dp, rng) < 1e-8);

  // Blur with an exact spectral zero at the Nyquist bin.
  Vec k(3);
  k << 0.25, 0.5, 0.25;
  LinearOperator blur = LinearOperator::circulant_blur(8, k);
  Pseudoinverse bp(blur);
  CHECK(consistency_gap(blur, bp, rng) < 1e-6);
}

TEST_CASE("conjugate-gradient solver agrees with the direct route") {
  Rng rng = make_rng(15);
  LinearOperator dense = make_dense(5, 8, rng);
  Pseudoinverse direct(dense, PinvSolver::direct);
  Pseudoinverse cg(dense, PinvSolver::conjugate_gradient);
  for (int t = 0; t < 5; ++t) {
    Vec u = draw_normal_vec(rng, 5);
    CHECK((direct.apply(u) - cg.apply(u)).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(consistency_gap(dense, cg, rng) < 1e-6);
  CHECK(transpose_gap(cg, rng) < 1e-6);
}

TEST_CASE("pseudoinverse transpose obeys the inner-product identity") {
  Rng rng = make_rng(16);
  CHECK(transpose_gap(Pseudoinverse(LinearOperator::mask(8, {1, 2, 4, 7})),
                      rng) < 1e-10);
  CHECK(transpose_gap(Pseudoinverse(make_dense(5, 8, rng)), rng) < 1e-10);
  Vec k(3);
  k << 0.3, 0.5, 0.2;
  CHECK(transpose_gap(Pseudoinverse(LinearOperator::circulant_blur(8, k)),
                      rng) < 1e-10);
}

TEST_CASE("operator json round trips preserve the action") {
  Rng rng = make_rng(17);
  std::vector<LinearOperator> ops;
  ops.push_back(LinearOperator::mask(6, {0, 3, 5}));
  ops.push_back(make_dense(3, 6, rng));
  Vec k(3);
  k << 0.2, 0.6, 0.2;
  ops.push_back(LinearOperator::circulant_blur(6, k));
  for (const auto& op : ops) {
    LinearOperator back = LinearOperator::from_json(op.to_json());
    Vec x = draw_normal_vec(rng, op.cols());
    CHECK((op.apply(x) - back.apply(x)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(back.rows() == op.rows());
  }
}

TEST_CASE("identity operator reduces the range-space loss to the plain one") {
  Rng rng = make_rng(18);
  const int n = 5;
  Pseudoinverse idp(LinearOperator::identity(n));
  Mat W(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) W(i, j) = 0.3 * draw_normal(rng);
  auto f = [&](const Vec& y) -> Vec { return y + W * y.array().tanh().matrix(); };
  for (int t = 0; t < 10; ++t) {
    Vec y = draw_normal_vec(rng, n);
    DivergenceProbe probe = DivergenceProbe::draw(rng, n);
    LossValue a = unsure_loss(f, y, 0.21, probe);
    LossValue b = general_unsure_loss(f, y, idp, 0.21, probe);
    CHECK(a.total == b.total);
    CHECK(a.residual == b.residual);
    CHECK(a.divergence_raw == b.divergence_raw);
  }
}

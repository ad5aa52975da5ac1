#include "unsure/oracles.hpp"

#include <cmath>
#include <numbers>

#include "unsure/quadrature.hpp"

namespace unsure::oracle {

namespace {

struct Quadratic {
  Mat Q;
  Vec v;

  double value(const Vec& eta) const {
    return -eta.dot(Q * eta) + 2.0 * eta.dot(v);
  }
  Vec grad(const Vec& eta) const { return -2.0 * (Q * eta) + 2.0 * v; }
};

Quadratic build_quadratic(const ScoreMoments& moments,
                          const CovarianceBasis& basis) {
  const int s = static_cast<int>(basis.psi.size());
  Quadratic q;
  q.Q = Mat(s, s);
  q.v = Vec(s);
  for (int i = 0; i < s; ++i) {
    q.v[i] = basis.psi[i].trace();
    for (int j = 0; j < s; ++j) {
      q.Q(i, j) = (basis.psi[i] * moments.H * basis.psi[j].transpose()).trace();
    }
  }
  return q;
}

}  // namespace

Vec maximize_basis_objective(const ScoreMoments& moments,
                             const CovarianceBasis& basis, int restarts,
                             std::uint64_t seed) {
  Quadratic q = build_quadratic(moments, basis);
  const int s = static_cast<int>(q.v.size());
  Rng rng = substream(seed, "basis_oracle");
  double scale = q.v.cwiseAbs().maxCoeff() /
                 std::max(q.Q.cwiseAbs().maxCoeff(), 1e-300);

  Vec best = Vec::Zero(s);
  double best_val = q.value(best);
  for (int r = 0; r < restarts; ++r) {
    Vec eta = scale * draw_normal_vec(rng, s);
    double val = q.value(eta);
    for (int it = 0; it < 50000; ++it) {
      Vec g = q.grad(eta);
      double denom = 2.0 * g.dot(q.Q * g);
      if (denom <= 0) break;  // objective not concave along g
      double t = g.squaredNorm() / denom;  // exact line search
      Vec next = eta + t * g;
      double next_val = q.value(next);
      if (!(next_val > val + 1e-18 * (1.0 + std::abs(val)))) {
        eta = next;
        break;
      }
      eta = next;
      val = next_val;
    }
    val = q.value(eta);
    if (val > best_val) {
      best_val = val;
      best = eta;
    }
  }
  return best;
}

namespace {

// Local PG objective: J(eta, gamma) =
//   -(eta^2 h02 + 2 eta gamma (h12 - h01) + gamma^2 (h22 + n - 2 h11))
//   + 2 (eta n + gamma h10).
double pg_value(const ScoreMoments& m, int n, double eta, double gamma) {
  double h02 = m.pg(0, 2), h12 = m.pg(1, 2), h01 = m.pg(0, 1);
  double h22 = m.pg(2, 2), h11 = m.pg(1, 1), h10 = m.pg(1, 0);
  double cross = h12 - h01;
  double gg = h22 + n - 2.0 * h11;
  return -(eta * eta * h02 + 2.0 * eta * gamma * cross + gamma * gamma * gg) +
         2.0 * (eta * n + gamma * h10);
}

}  // namespace

std::pair<double, double> maximize_pg_objective(const ScoreMoments& m, int n) {
  double h02 = m.pg(0, 2);
  double gg = m.pg(2, 2) + n - 2.0 * m.pg(1, 1);
  require(h02 > 0 && gg > 0, ErrorCode::degenerate_moments,
          "pg oracle needs positive curvature");
  double eta_span = 4.0 * n / h02 + 1.0;
  double gamma_span = 4.0 * std::abs(m.pg(1, 0)) / gg + 1.0;

  double best_eta = 0.0, best_gamma = 0.0;
  double best = pg_value(m, n, 0.0, 0.0);
  const int grid = 200;
  for (int i = 0; i < grid; ++i) {
    double eta = -eta_span + 2.0 * eta_span * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      double gamma = -gamma_span + 2.0 * gamma_span * j / (grid - 1);
      double val = pg_value(m, n, eta, gamma);
      if (val > best) {
        best = val;
        best_eta = eta;
        best_gamma = gamma;
      }
    }
  }

  // Finite-difference Newton iterations; each step is exact for a quadratic
  // up to roundoff, so a few iterations push the error below 1e-9.
  auto J = [&](double e, double g) { return pg_value(m, n, e, g); };
  for (int it = 0; it < 3; ++it) {
    double h = 1e-3 * (std::abs(best_eta) + std::abs(best_gamma) + 1.0);
    double ge = (J(best_eta + h, best_gamma) - J(best_eta - h, best_gamma)) /
                (2.0 * h);
    double gg_ = (J(best_eta, best_gamma + h) - J(best_eta, best_gamma - h)) /
                 (2.0 * h);
    double hee = (J(best_eta + h, best_gamma) - 2.0 * J(best_eta, best_gamma) +
                  J(best_eta - h, best_gamma)) /
                 (h * h);
    double hgg = (J(best_eta, best_gamma + h) - 2.0 * J(best_eta, best_gamma) +
                  J(best_eta, best_gamma - h)) /
                 (h * h);
    double heg =
        (J(best_eta + h, best_gamma + h) - J(best_eta + h, best_gamma - h) -
         J(best_eta - h, best_gamma + h) + J(best_eta - h, best_gamma - h)) /
        (4.0 * h * h);
    double det = hee * hgg - heg * heg;
    require(std::abs(det) > 1e-300, ErrorCode::degenerate_denominator,
            "pg oracle Hessian is singular");
    best_eta -= (hgg * ge - heg * gg_) / det;
    best_gamma -= (hee * gg_ - heg * ge) / det;
  }
  return {best_eta, best_gamma};
}

double maximize_hudson_objective(const ScoreField& field, const Dataset& data,
                                 const std::function<double(double)>& a) {
  require(data.count() > 0, ErrorCode::empty_dataset, "hudson oracle: no data");
  const int n = data.dim();
  double s_sq = 0.0, num = 0.0, wdiv = 0.0;
  for (int k = 0; k < data.count(); ++k) {
    const Vec y = data.samples.row(k).transpose();
    auto hudson_field = [&](const Vec& z) {
      Vec sc = field(z);
      Vec out(n);
      for (int i = 0; i < n; ++i) {
        double h = 1e-5 * (1.0 + std::abs(z[i]));
        double ap = (a(z[i] + h) - a(z[i] - h)) / (2.0 * h);
        out[i] = a(z[i]) * sc[i] + ap;
      }
      return out;
    };
    Vec s = hudson_field(y);
    s_sq += s.squaredNorm();
    for (int i = 0; i < n; ++i) {
      num += a(y[i]);
      double h = 1e-4 * (1.0 + std::abs(y[i]));
      Vec yp = y, ym = y;
      yp[i] += h;
      ym[i] -= h;
      double dsi = (hudson_field(yp)[i] - hudson_field(ym)[i]) / (2.0 * h);
      wdiv += a(y[i]) * dsi;
    }
  }
  s_sq /= data.count();
  num /= data.count();
  wdiv /= data.count();

  auto J = [&](double eta) {
    return (s_sq + 2.0 * wdiv) * eta * eta + 2.0 * eta * num;
  };
  require(s_sq + 2.0 * wdiv < 0, ErrorCode::degenerate_denominator,
          "hudson oracle objective is not concave");

  double span = 4.0 * std::abs(num) / std::abs(s_sq + 2.0 * wdiv) + 1.0;
  double lo = -span, hi = span;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = J(c), fd = J(d);
  for (int it = 0; it < 100; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = J(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = J(d);
    }
  }
  return 0.5 * (lo + hi);
}

double scalar_estimator_risk(const SignalPrior& prior, double sigma,
                             const std::function<double(double)>& f) {
  require(sigma > 0, ErrorCode::invalid_argument, "sigma must be positive");
  const double s2 = sigma * sigma;
  auto gauss = [](double z, double mu, double var) {
    return std::exp(-0.5 * (z - mu) * (z - mu) / var) /
           std::sqrt(2.0 * std::numbers::pi * var);
  };
  QuadratureOptions inner_opts;
  inner_opts.abs_tol = 1e-11;
  inner_opts.initial_panels = 96;
  double risk = 0.0;
  for (const auto& comp : prior.components()) {
    if (const auto* pm = std::get_if<PointMass>(&comp.kind)) {
      double x = pm->location;
      risk += comp.weight *
              integrate(
                  [&](double y) {
                    double e = f(y) - x;
                    return gauss(y, x, s2) * e * e;
                  },
                  x - 14.0 * sigma, x + 14.0 * sigma, inner_opts);
    } else {
      const auto& gc = std::get<GaussianComponent>(comp.kind);
      double sx = std::sqrt(gc.variance);
      QuadratureOptions outer_opts;
      outer_opts.abs_tol = 1e-10;
      outer_opts.initial_panels = 64;
      risk += comp.weight *
              integrate(
                  [&](double x) {
                    double inner = integrate(
                        [&](double y) {
                          double e = f(y) - x;
                          return gauss(y, x, s2) * e * e;
                        },
                        x - 14.0 * sigma, x + 14.0 * sigma, inner_opts);
                    return gauss(x, gc.mean, gc.variance) * inner;
                  },
                  gc.mean - 10.0 * sx, gc.mean + 10.0 * sx, outer_opts);
    }
  }
  return risk;
}

}  // namespace unsure::oracle

#include "unsure/multipliers.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <numbers>

namespace unsure {

CovarianceBasis CovarianceBasis::isotropic(int n) {
  CovarianceBasis b;
  b.tag = BasisTag::isotropic;
  b.psi.push_back(Mat::Identity(n, n));
  return b;
}

CovarianceBasis CovarianceBasis::diagonal(int n) {
  CovarianceBasis b;
  b.tag = BasisTag::diagonal;
  for (int i = 0; i < n; ++i) {
    Mat p = Mat::Zero(n, n);
    p(i, i) = 1.0;
    b.psi.push_back(std::move(p));
  }
  return b;
}

CovarianceBasis CovarianceBasis::circulant(int n, int r) {
  require(r >= 0 && 2 * r < n, ErrorCode::invalid_argument,
          "circulant basis needs 0 <= r < n/2");
  CovarianceBasis b;
  b.tag = BasisTag::circulant;
  b.radius = r;
  for (int lag = -r; lag <= r; ++lag) {
    Mat t = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) t(i, (i + lag + n) % n) = 1.0;
    b.psi.push_back(std::move(t));
  }
  return b;
}

CovarianceBasis CovarianceBasis::general(std::vector<Mat> psi) {
  require(!psi.empty(), ErrorCode::invalid_argument, "empty basis");
  CovarianceBasis b;
  b.tag = BasisTag::general;
  b.psi = std::move(psi);
  return b;
}

Json MultiplierSolution::to_json() const {
  Json j;
  switch (kind) {
    case MultiplierKind::isotropic: j["kind"] = "isotropic"; break;
    case MultiplierKind::diagonal: j["kind"] = "diagonal"; break;
    case MultiplierKind::circulant: j["kind"] = "circulant"; break;
    case MultiplierKind::poisson_gaussian: j["kind"] = "poisson_gaussian"; break;
    case MultiplierKind::hudson: j["kind"] = "hudson"; break;
    case MultiplierKind::general: j["kind"] = "general"; break;
  }
  j["eta"] = std::vector<double>(eta.begin(), eta.end());
  if (gamma) j["gamma"] = *gamma;
  j["objective_value"] = objective_value;
  j["condition_number"] = condition_number;
  j["radius"] = radius;
  return j;
}

MultiplierSolution MultiplierSolution::from_json(const Json& j) {
  MultiplierSolution s;
  std::string kind = j.value("kind", "isotropic");
  if (kind == "isotropic") s.kind = MultiplierKind::isotropic;
  else if (kind == "diagonal") s.kind = MultiplierKind::diagonal;
  else if (kind == "circulant") s.kind = MultiplierKind::circulant;
  else if (kind == "poisson_gaussian") s.kind = MultiplierKind::poisson_gaussian;
  else if (kind == "hudson") s.kind = MultiplierKind::hudson;
  else if (kind == "general") s.kind = MultiplierKind::general;
  else fail(ErrorCode::config_error, "unknown multiplier kind: " + kind);
  auto e = j.value("eta", std::vector<double>{});
  s.eta = Eigen::Map<const Vec>(e.data(), e.size());
  if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
  s.objective_value = j.value("objective_value", 0.0);
  s.condition_number = j.value("condition_number", 1.0);
  s.radius = j.value("radius", 0);
  return s;
}

namespace {

// Gram system of Thm-style solves: Q_ij = tr(Psi_i H Psi_j^T), v_i = tr(Psi_i).
void gram_system(const Mat& H, const CovarianceBasis& basis, Mat& Q, Vec& v) {
  const int s = static_cast<int>(basis.psi.size());
  Q.resize(s, s);
  v.resize(s);
  for (int i = 0; i < s; ++i) {
    require(basis.psi[i].rows() == H.rows() && basis.psi[i].cols() == H.cols(),
            ErrorCode::dimension_mismatch, "basis/moment dimension mismatch");
    v[i] = basis.psi[i].trace();
    for (int j = 0; j < s; ++j) {
      Q(i, j) = (basis.psi[i] * H * basis.psi[j].transpose()).trace();
    }
  }
}

double condition_of(const Mat& Q) {
  Eigen::JacobiSVD<Mat> svd(Q);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace

double basis_objective(const ScoreMoments& moments,
                       const CovarianceBasis& basis, const Vec& eta) {
  Mat Q;
  Vec v;
  gram_system(moments.H, basis, Q, v);
  return -eta.dot(Q * eta) + 2.0 * eta.dot(v);
}

MultiplierSolution solve_isotropic(const ScoreMoments& moments, int n) {
  require(moments.trace_H > 0.0, ErrorCode::degenerate_score,
          "trace of score second moment must be positive");
  MultiplierSolution s;
  s.kind = MultiplierKind::isotropic;
  s.eta = Vec::Constant(1, n / moments.trace_H);
  s.objective_value = static_cast<double>(n) * n / moments.trace_H;
  s.condition_number = 1.0;
  return s;
}

MultiplierSolution solve_diagonal(const ScoreMoments& moments) {
  const auto n = moments.H.rows();
  require(n > 0, ErrorCode::degenerate_moments, "empty moments");
  MultiplierSolution s;
  s.kind = MultiplierKind::diagonal;
  s.eta.resize(n);
  double obj = 0.0;
  double hmin = std::numeric_limits<double>::infinity();
  double hmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double hii = moments.H(i, i);
    require(hii > 0.0, ErrorCode::degenerate_score,
            "zero diagonal in score second moment");
    s.eta[i] = 1.0 / hii;
    obj += 1.0 / hii;
    hmin = std::min(hmin, hii);
    hmax = std::max(hmax, hii);
  }
  s.objective_value = obj;
  s.condition_number = hmax / hmin;
  return s;
}

namespace {

// Autocorrelation window reordered so index m holds lag m (mod L).
Vec centered_to_mod(const Vec& h, int r) {
  const int L = 2 * r + 1;
  Vec c(L);
  for (int m = 0; m < L; ++m) {
    int lag = m <= r ? m : m - L;
    c[m] = h[lag + r];
  }
  return c;
}

}  // namespace

MultiplierSolution solve_circulant(const ScoreMoments& moments, int r) {
  const int L = 2 * r + 1;
  require(moments.radius >= r, ErrorCode::invalid_argument,
          "moments lack the requested autocorrelation radius");
  Vec h(L);
  for (int j = 0; j < L; ++j) h[j] = moments.autocorr[j + (moments.radius - r)];
  Vec c = centered_to_mod(h, r);

  using Cplx = std::complex<double>;
  const double w = 2.0 * std::numbers::pi / L;
  std::vector<Cplx> ch(L);
  double max_abs = 0.0;
  for (int k = 0; k < L; ++k) {
    Cplx acc(0.0, 0.0);
    for (int m = 0; m < L; ++m) {
      acc += c[m] * std::exp(Cplx(0.0, -w * k * m));
    }
    ch[k] = acc;
    max_abs = std::max(max_abs, std::abs(acc));
  }
  double min_abs = std::numeric_limits<double>::infinity();
  for (const auto& b : ch) {
    require(std::abs(b) >= 1e-12, ErrorCode::spectral_zero,
            "autocorrelation spectrum has a zero bin");
    min_abs = std::min(min_abs, std::abs(b));
  }

  // System sum_v c_{(v-u) mod L} eta_v = delta_{u,0}; in Fourier space the
  // correlation becomes conj(c_hat) * eta_hat = 1.
  Vec eta_mod(L);
  for (int v = 0; v < L; ++v) {
    Cplx acc(0.0, 0.0);
    for (int k = 0; k < L; ++k) {
      acc += std::exp(Cplx(0.0, w * k * v)) / std::conj(ch[k]);
    }
    eta_mod[v] = acc.real() / L;
  }

  MultiplierSolution s;
  s.kind = MultiplierKind::circulant;
  s.radius = r;
  s.eta.resize(L);
  for (int m = 0; m < L; ++m) {
    int lag = m <= r ? m : m - L;
    s.eta[lag + r] = eta_mod[m];
  }
  s.condition_number = max_abs / min_abs;
  // At the optimum the Lagrangian value is eta^T v = n * (center tap).
  s.objective_value = moments.n * s.eta[r];
  return s;
}

MultiplierSolution solve_circulant_direct(const ScoreMoments& moments, int r) {
  const int L = 2 * r + 1;
  require(moments.radius >= r, ErrorCode::invalid_argument,
          "moments lack the requested autocorrelation radius");
  Vec h(L);
  for (int j = 0; j < L; ++j) h[j] = moments.autocorr[j + (moments.radius - r)];
  Vec c = centered_to_mod(h, r);
  Mat C(L, L);
  for (int u = 0; u < L; ++u) {
    for (int v = 0; v < L; ++v) {
      C(u, v) = c[((v - u) % L + L) % L];
    }
  }
  Vec rhs = Vec::Zero(L);
  rhs[0] = 1.0;
  double cond = condition_of(C);
  require(std::isfinite(cond) && cond < 1e12, ErrorCode::spectral_zero,
          "circulant system singular");
  Vec eta_mod = Eigen::PartialPivLU<Mat>(C).solve(rhs);

  MultiplierSolution s;
  s.kind = MultiplierKind::circulant;
  s.radius = r;
  s.eta.resize(L);
  for (int m = 0; m < L; ++m) {
    int lag = m <= r ? m : m - L;
    s.eta[lag + r] = eta_mod[m];
  }
  s.condition_number = cond;
  s.objective_value = moments.n * s.eta[r];
  return s;
}

MultiplierSolution solve_general(const ScoreMoments& moments,
                                 const CovarianceBasis& basis) {
  Mat Q;
  Vec v;
  gram_system(moments.H, basis, Q, v);
  double cond = condition_of(Q);
  require(std::isfinite(cond) && cond < 1e10, ErrorCode::singular_gram,
          "basis Gram matrix numerically singular");
  Vec eta = Eigen::PartialPivLU<Mat>(Q).solve(v);

  MultiplierSolution s;
  s.kind = MultiplierKind::general;
  s.radius = basis.radius;
  s.eta = eta;
  s.condition_number = cond;
  s.objective_value = -eta.dot(Q * eta) + 2.0 * eta.dot(v);
  return s;
}

double pg_objective(const ScoreMoments& moments, int n, double eta,
                    double gamma) {
  const Mat& h = moments.pg;
  double cross = h(1, 2) - h(0, 1);
  double gg = h(2, 2) + n - 2.0 * h(1, 1);
  return -(eta * eta * h(0, 2) + 2.0 * eta * gamma * cross +
           gamma * gamma * gg) +
         2.0 * (eta * n + gamma * h(1, 0));
}

MultiplierSolution solve_poisson_gaussian(const ScoreMoments& moments, int n) {
  const Mat& h = moments.pg;
  double h02 = h(0, 2);
  require(h02 > 0.0, ErrorCode::degenerate_moments,
          "h_{0,2} must be positive");
  double cross = h(1, 2) - h(0, 1);
  double gg = h(2, 2) + n - 2.0 * h(1, 1);
  double den = h02 * gg - cross * cross;
  double scale = std::max({std::abs(h02 * gg), cross * cross, 1e-300});
  require(std::abs(den) > 1e-12 * scale, ErrorCode::degenerate_denominator,
          "gamma denominator vanishes");
  double gamma = (h(1, 0) * h02 - n * cross) / den;
  double eta = n / h02 - gamma * cross / h02;

  MultiplierSolution s;
  s.kind = MultiplierKind::poisson_gaussian;
  s.eta = Vec::Constant(1, eta);
  s.gamma = gamma;
  s.objective_value = pg_objective(moments, n, eta, gamma);
  s.condition_number = condition_of((Mat(2, 2) << h02, cross, cross, gg)
                                        .finished());
  return s;
}

HudsonStats hudson_stats(const ScoreField& field, const Dataset& data,
                         const std::function<double(double)>& a,
                         const HudsonOptions& opts) {
  require(data.count() > 0, ErrorCode::empty_dataset, "no samples");
  require(static_cast<bool>(a), ErrorCode::invalid_argument,
          "weight function required");
  const int n = data.dim();
  const double step = opts.fd_step;

  auto a_prime = [&](double u) {
    if (opts.a_prime) return opts.a_prime(u);
    double h = step * (1.0 + std::abs(u));
    return (a(u + h) - a(u - h)) / (2.0 * h);
  };
  // s(y) = a(y) o score(y) + a'(y), componentwise.
  auto eval_s = [&](const Vec& y) {
    Vec sc = field(y);
    Vec s(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      s[i] = a(y[i]) * sc[i] + a_prime(y[i]);
    }
    return s;
  };

  HudsonStats st;
  for (int t = 0; t < data.count(); ++t) {
    Vec y = data.samples.row(t);
    Vec s = eval_s(y);
    st.s_sq += s.squaredNorm();
    Vec yp = y;
    Vec ym = y;
    for (int i = 0; i < n; ++i) {
      double h = step * (1.0 + std::abs(y[i]));
      yp[i] = y[i] + h;
      ym[i] = y[i] - h;
      double dsi = (eval_s(yp)[i] - eval_s(ym)[i]) / (2.0 * h);
      st.weighted_div += a(y[i]) * dsi;
      st.num += a(y[i]);
      yp[i] = y[i];
      ym[i] = y[i];
    }
  }
  st.num /= data.count();
  st.s_sq /= data.count();
  st.weighted_div /= data.count();
  st.den = -st.s_sq - 2.0 * st.weighted_div;
  return st;
}

MultiplierSolution solve_hudson(const ScoreField& field, const Dataset& data,
                                const std::function<double(double)>& a,
                                const HudsonOptions& opts) {
  HudsonStats st = hudson_stats(field, data, a, opts);
  require(std::abs(st.den) > 1e-12 * std::max(1.0, std::abs(st.num)),
          ErrorCode::degenerate_denominator, "hudson denominator vanishes");
  MultiplierSolution s;
  s.kind = MultiplierKind::hudson;
  s.eta = Vec::Constant(1, st.num / st.den);
  // J(eta) = (E||s||^2 + 2 sum E a ds/dy) eta^2 + 2 eta sum E a.
  double quad = st.s_sq + 2.0 * st.weighted_div;
  s.objective_value = quad * s.eta[0] * s.eta[0] + 2.0 * s.eta[0] * st.num;
  s.condition_number = 1.0;
  return s;
}

}  // namespace unsure

#include "unsure/losses.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>

namespace unsure {

Vec Weight::apply(const Vec& b) const {
  if (std::get_if<IdentityWeight>(&v_)) return b;
  if (const auto* d = std::get_if<DiagonalWeight>(&v_)) {
    require(d->d.size() == b.size(), ErrorCode::dimension_mismatch,
            "diagonal weight size mismatch");
    return d->d.cwiseProduct(b);
  }
  if (const auto* c = std::get_if<CirculantWeight>(&v_)) {
    const int n = static_cast<int>(b.size());
    const int r = static_cast<int>(c->kernel.size() / 2);
    require(c->kernel.size() % 2 == 1 && 2 * r < n,
            ErrorCode::dimension_mismatch, "circulant weight size mismatch");
    Vec out(n);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int lag = -r; lag <= r; ++lag) {
        acc += c->kernel[lag + r] * b[(i + lag + n) % n];
      }
      out[i] = acc;
    }
    return out;
  }
  const auto& e = std::get<ExplicitWeight>(v_);
  require(e.M.cols() == b.size(), ErrorCode::dimension_mismatch,
          "weight matrix size mismatch");
  return e.M * b;
}

double Weight::trace(int n) const {
  if (std::get_if<IdentityWeight>(&v_)) return n;
  if (const auto* d = std::get_if<DiagonalWeight>(&v_)) return d->d.sum();
  if (const auto* c = std::get_if<CirculantWeight>(&v_)) {
    return n * c->kernel[c->kernel.size() / 2];
  }
  return std::get<ExplicitWeight>(v_).M.trace();
}

void Weight::require_psd(int n) const {
  if (std::get_if<IdentityWeight>(&v_)) return;
  if (const auto* d = std::get_if<DiagonalWeight>(&v_)) {
    require((d->d.array() >= 0.0).all(), ErrorCode::not_psd,
            "diagonal covariance has negative entries");
    return;
  }
  if (const auto* c = std::get_if<CirculantWeight>(&v_)) {
    const int r = static_cast<int>(c->kernel.size() / 2);
    for (int lag = 1; lag <= r; ++lag) {
      require(std::abs(c->kernel[r + lag] - c->kernel[r - lag]) <= 1e-12,
              ErrorCode::not_psd, "circulant covariance kernel not symmetric");
    }
    const double w = 2.0 * std::numbers::pi / n;
    for (int k = 0; k < n; ++k) {
      double bin = c->kernel[r];
      for (int lag = 1; lag <= r; ++lag) {
        bin += 2.0 * c->kernel[r + lag] * std::cos(w * k * lag);
      }
      require(bin >= -1e-10, ErrorCode::not_psd,
              "circulant covariance has a negative spectral bin");
    }
    return;
  }
  const auto& m = std::get<ExplicitWeight>(v_).M;
  require(m.rows() == m.cols(), ErrorCode::not_psd,
          "covariance must be square");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          ErrorCode::not_psd, "covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale, ErrorCode::not_psd,
          "covariance has a negative eigenvalue");
}

DivergenceProbe DivergenceProbe::draw(Rng& rng, int n, double tau) {
  require(tau > 0.0, ErrorCode::invalid_argument, "probe tau must be positive");
  DivergenceProbe p;
  p.b = draw_normal_vec(rng, n);
  p.tau = tau;
  return p;
}

namespace {

struct ProbeEval {
  Vec f0;
  Vec delta;  // f(y + tau b) - f(y)
};

ProbeEval eval_probe(const VecMap& f, const Vec& y,
                     const DivergenceProbe& probe) {
  require(probe.tau > 0.0, ErrorCode::invalid_argument,
          "probe tau must be positive");
  require(probe.b.size() == y.size(), ErrorCode::dimension_mismatch,
          "probe size mismatch");
  ProbeEval ev;
  ev.f0 = f(y);
  require(ev.f0.size() == y.size(), ErrorCode::dimension_mismatch,
          "map output size mismatch");
  Vec shifted = y + probe.tau * probe.b;
  ev.delta = f(shifted) - ev.f0;
  return ev;
}

double finish_total(LossValue& v) {
  v.total = v.residual + v.divergence_term;
  require(std::isfinite(v.total), ErrorCode::non_finite_loss,
          "loss evaluated to a non-finite value");
  return v.total;
}

}  // namespace

LossValue unsure_loss(const VecMap& f, const Vec& y, double eta,
                      const DivergenceProbe& probe) {
  ProbeEval ev = eval_probe(f, y, probe);
  LossValue v;
  Vec resid = ev.f0 - y;
  v.residual = resid.squaredNorm();
  v.divergence_raw = probe.b.dot(ev.delta) / probe.tau;
  v.divergence_term = 2.0 * (eta * v.divergence_raw);
  v.div_grad = Vec::Constant(1, 2.0 * v.divergence_raw);
  finish_total(v);
  return v;
}

LossValue sure_loss(const VecMap& f, const Vec& y, double sigma2,
                    const DivergenceProbe& probe) {
  require(sigma2 >= 0.0, ErrorCode::invalid_argument,
          "sigma2 must be nonnegative");
  LossValue v = unsure_loss(f, y, sigma2, probe);
  v.constant = -static_cast<double>(y.size()) * sigma2;
  v.div_grad.resize(0);
  return v;
}

LossValue correlated_sure_loss(const VecMap& f, const Vec& y,
                               const Weight& sigma,
                               const DivergenceProbe& probe) {
  const int n = static_cast<int>(y.size());
  sigma.require_psd(n);
  ProbeEval ev = eval_probe(f, y, probe);
  LossValue v;
  Vec resid = ev.f0 - y;
  v.residual = resid.squaredNorm();
  v.divergence_raw = probe.b.dot(ev.delta) / probe.tau;
  v.divergence_term = 2.0 * (sigma.apply(probe.b).dot(ev.delta) / probe.tau);
  v.constant = -sigma.trace(n);
  finish_total(v);
  return v;
}

LossValue c_unsure_loss(const VecMap& f, const Vec& y, const Vec& eta_kernel,
                        const DivergenceProbe& probe) {
  require(eta_kernel.size() % 2 == 1, ErrorCode::invalid_argument,
          "kernel length must be odd");
  const int n = static_cast<int>(y.size());
  const int r = static_cast<int>(eta_kernel.size() / 2);
  require(2 * r < n, ErrorCode::dimension_mismatch,
          "kernel radius too large for signal");
  ProbeEval ev = eval_probe(f, y, probe);
  LossValue v;
  Vec resid = ev.f0 - y;
  v.residual = resid.squaredNorm();
  v.divergence_raw = probe.b.dot(ev.delta) / probe.tau;
  v.div_grad.resize(2 * r + 1);
  double acc = 0.0;
  for (int lag = -r; lag <= r; ++lag) {
    double raw_lag;
    if (lag == 0) {
      raw_lag = v.divergence_raw;
    } else {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) {
        dot += probe.b[(i + lag + n) % n] * ev.delta[i];
      }
      raw_lag = dot / probe.tau;
    }
    acc += eta_kernel[lag + r] * raw_lag;
    v.div_grad[lag + r] = 2.0 * raw_lag;
  }
  v.divergence_term = 2.0 * acc;
  finish_total(v);
  return v;
}

LossValue pg_unsure_loss(const VecMap& f, const Vec& y, double eta,
                         double gamma, const DivergenceProbe& probe) {
  ProbeEval ev = eval_probe(f, y, probe);
  LossValue v;
  Vec resid = ev.f0 - y;
  v.residual = resid.squaredNorm();
  v.divergence_raw = probe.b.dot(ev.delta) / probe.tau;
  double raw_y = y.cwiseProduct(probe.b).dot(ev.delta) / probe.tau;
  v.divergence_term = 2.0 * (eta * v.divergence_raw + gamma * raw_y);
  v.div_grad.resize(2);
  v.div_grad[0] = 2.0 * v.divergence_raw;
  v.div_grad[1] = 2.0 * raw_y;
  finish_total(v);
  return v;
}

LossValue hudson_loss(const VecMap& f, const Vec& y, double eta,
                      const std::function<double(double)>& a,
                      const DivergenceProbe& probe) {
  require(static_cast<bool>(a), ErrorCode::invalid_argument,
          "weight function required");
  ProbeEval ev = eval_probe(f, y, probe);
  LossValue v;
  Vec resid = ev.f0 - y;
  v.residual = resid.squaredNorm();
  v.divergence_raw = probe.b.dot(ev.delta) / probe.tau;
  Vec wb(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) wb[i] = a(y[i]) * probe.b[i];
  double raw_w = wb.dot(ev.delta) / probe.tau;
  v.divergence_term = 2.0 * (eta * raw_w);
  v.div_grad = Vec::Constant(1, 2.0 * raw_w);
  finish_total(v);
  return v;
}

LossValue general_unsure_loss(const VecMap& f, const Vec& y,
                              const Pseudoinverse& pinv, double eta,
                              const DivergenceProbe& probe) {
  const LinearOperator& op = pinv.op();
  require(y.size() == op.rows(), ErrorCode::operator_mismatch,
          "measurement size must match operator rows");
  require(probe.b.size() == y.size(), ErrorCode::dimension_mismatch,
          "probe size mismatch");
  require(probe.tau > 0.0, ErrorCode::invalid_argument,
          "probe tau must be positive");

  Vec f0 = f(y);
  require(f0.size() == op.cols(), ErrorCode::operator_mismatch,
          "reconstruction size must match operator cols");
  Vec f1 = f(y + probe.tau * probe.b);
  Vec delta = f1 - f0;

  LossValue v;
  v.residual = pinv.apply(op.apply(f0) - y).squaredNorm();
  // (A^+ b)^T A^+ A (f(y+tau b) - f(y)) / tau estimates
  // tr((A^+)^T A^+ A df/dy).
  v.divergence_raw =
      pinv.apply(probe.b).dot(pinv.apply(op.apply(delta))) / probe.tau;
  v.divergence_term = 2.0 * (eta * v.divergence_raw);
  v.div_grad = Vec::Constant(1, 2.0 * v.divergence_raw);
  finish_total(v);
  return v;
}

double mc_divergence(const VecMap& f, const Vec& y,
                     const DivergenceProbe& probe, const Weight& m) {
  ProbeEval ev = eval_probe(f, y, probe);
  return m.apply(probe.b).dot(ev.delta) / probe.tau;
}

double mc_divergence(const VecMap& f, const Vec& y,
                     const DivergenceProbe& probe) {
  return mc_divergence(f, y, probe, probe.weight);
}

double ar_dae_loss(const VecMap& s, const Vec& y, const Vec& b, double tau) {
  require(b.size() == y.size(), ErrorCode::dimension_mismatch,
          "probe size mismatch");
  Vec r = b + tau * s(y + tau * b);
  double v = r.squaredNorm();
  require(std::isfinite(v), ErrorCode::non_finite_loss,
          "score loss evaluated to a non-finite value");
  return v;
}

double ar_dae_loss_draw(const VecMap& s, const Vec& y, double delta, Rng& rng) {
  require(delta > 0.0, ErrorCode::invalid_argument, "delta must be positive");
  Vec b = draw_normal_vec(rng, static_cast<int>(y.size()));
  double tau = delta * draw_normal(rng);
  return ar_dae_loss(s, y, b, tau);
}

}  // namespace unsure

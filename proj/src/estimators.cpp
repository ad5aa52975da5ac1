#include "unsure/estimators.hpp"

#include <cmath>

namespace unsure {

Estimator Estimator::mmse(NoisyMarginal marginal) {
  return Estimator(Mmse{{std::move(marginal)}});
}

Estimator Estimator::mmse_per_pixel(std::vector<NoisyMarginal> marginals) {
  require(!marginals.empty(), ErrorCode::invalid_argument,
          "mmse estimator needs marginals");
  return Estimator(Mmse{std::move(marginals)});
}

Estimator Estimator::cv(const SignalPrior& prior) {
  return Estimator(Cv{prior.mean()});
}

Estimator Estimator::zed(ScoreField score, MultiplierSolution multipliers,
                         NoiseFamily family) {
  Zed z{std::move(score), std::move(multipliers)};
  z.family = family;
  return Estimator(std::move(z));
}

Estimator Estimator::zed_hudson(ScoreField score,
                                MultiplierSolution multipliers,
                                std::function<double(double)> a,
                                std::function<double(double)> a_prime) {
  Zed z{std::move(score), std::move(multipliers)};
  z.family = NoiseFamily::hudson;
  z.a = std::move(a);
  z.a_prime = std::move(a_prime);
  require(static_cast<bool>(z.a), ErrorCode::missing_multipliers,
          "hudson estimator needs the weight function");
  return Estimator(std::move(z));
}

Estimator Estimator::learned(std::function<Vec(const Vec&)> f) {
  require(static_cast<bool>(f), ErrorCode::invalid_argument,
          "learned estimator needs a map");
  return Estimator(Learned{std::move(f)});
}

namespace {

Vec apply_zed(const Estimator::Zed& z, const Vec& y) {
  const int n = static_cast<int>(y.size());
  Vec s = z.score(y);
  switch (z.family) {
    case NoiseFamily::isotropic:
      return y + z.multipliers.scalar() * s;
    case NoiseFamily::diagonal: {
      require(z.multipliers.eta.size() == n, ErrorCode::missing_multipliers,
              "diagonal multipliers have wrong size");
      return y + z.multipliers.eta.cwiseProduct(s);
    }
    case NoiseFamily::circulant: {
      const int r = z.multipliers.radius;
      require(z.multipliers.eta.size() == 2 * r + 1,
              ErrorCode::missing_multipliers, "kernel has wrong size");
      require(2 * r < n, ErrorCode::dimension_mismatch,
              "kernel radius too large for signal");
      Vec out = y;
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int lag = -r; lag <= r; ++lag) {
          acc += z.multipliers.eta[lag + r] * s[(i + lag + n) % n];
        }
        out[i] += acc;
      }
      return out;
    }
    case NoiseFamily::poisson_gaussian: {
      require(z.multipliers.gamma.has_value(), ErrorCode::missing_multipliers,
              "poisson-gaussian estimator needs gamma");
      double eta = z.multipliers.scalar();
      double gamma = *z.multipliers.gamma;
      Vec out(n);
      for (int i = 0; i < n; ++i) {
        out[i] = y[i] + (eta + gamma * y[i]) * s[i] + gamma;
      }
      return out;
    }
    case NoiseFamily::hudson: {
      require(static_cast<bool>(z.a), ErrorCode::missing_multipliers,
              "hudson estimator needs the weight function");
      double eta = z.multipliers.scalar();
      Vec out(n);
      for (int i = 0; i < n; ++i) {
        double ap;
        if (z.a_prime) {
          ap = z.a_prime(y[i]);
        } else {
          double h = z.fd_step * (1.0 + std::abs(y[i]));
          ap = (z.a(y[i] + h) - z.a(y[i] - h)) / (2.0 * h);
        }
        out[i] = y[i] + eta * (z.a(y[i]) * s[i] + ap);
      }
      return out;
    }
  }
  fail(ErrorCode::unsupported, "unknown estimator family");
}

}  // namespace

Vec Estimator::operator()(const Vec& y) const {
  if (const auto* m = std::get_if<Mmse>(&v_)) {
    const auto& ms = m->marginals;
    if (ms.size() > 1) {
      require(static_cast<Eigen::Index>(ms.size()) == y.size(),
              ErrorCode::dimension_mismatch, "per-pixel marginal mismatch");
    }
    Vec out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      out[i] = (ms.size() > 1 ? ms[i] : ms[0]).posterior_mean(y[i]);
    }
    return out;
  }
  if (const auto* c = std::get_if<Cv>(&v_)) {
    return Vec::Constant(y.size(), c->prior_mean);
  }
  if (const auto* z = std::get_if<Zed>(&v_)) {
    return apply_zed(*z, y);
  }
  if (const auto* comb = std::get_if<Combination>(&v_)) {
    return comb->omega * (*comb->base)(y) + (1.0 - comb->omega) * y;
  }
  return std::get<Learned>(v_).f(y);
}

Vec apply(const Estimator& e, const Vec& y) { return e(y); }

Estimator zed_from_mmse(Estimator mmse, double omega) {
  Estimator::Combination c;
  c.base = std::make_shared<Estimator>(std::move(mmse));
  c.omega = omega;
  return Estimator(std::move(c));
}

double omega_analytic(const NoisyMarginal& marginal) {
  double s2 = marginal.sigma() * marginal.sigma();
  double es2 = marginal.expected_score_sq();
  require(es2 > 0.0, ErrorCode::degenerate_score,
          "score second moment must be positive");
  return 1.0 / (s2 * es2);
}

double omega_empirical(const Estimator& mmse, const Dataset& data,
                       double sigma2) {
  require(data.count() > 0, ErrorCode::empty_dataset, "no samples");
  double acc = 0.0;
  for (int t = 0; t < data.count(); ++t) {
    Vec y = data.samples.row(t);
    acc += (mmse(y) - y).squaredNorm();
  }
  acc /= data.count();
  require(acc > 0.0, ErrorCode::degenerate_denominator,
          "mmse estimator equals identity on this data");
  return data.dim() * sigma2 / acc;
}

double zed_mse_from_mmse(double sigma2, double mmse) {
  require(sigma2 > 0.0, ErrorCode::invalid_argument,
          "sigma2 must be positive");
  require(mmse >= 0.0 && mmse < sigma2, ErrorCode::invalid_mmse,
          "mmse must lie in [0, sigma2)");
  return sigma2 * (1.0 / (1.0 - mmse / sigma2) - 1.0);
}

double zed_mse_series(double sigma2, double mmse, int terms) {
  require(sigma2 > 0.0, ErrorCode::invalid_argument,
          "sigma2 must be positive");
  require(mmse >= 0.0 && mmse < sigma2, ErrorCode::invalid_mmse,
          "mmse must lie in [0, sigma2)");
  require(terms >= 2, ErrorCode::invalid_argument, "terms must be >= 2");
  double ratio = mmse / sigma2;
  double total = mmse;
  double pow_j = ratio;  // ratio^(j-1)
  for (int j = 2; j <= terms; ++j) {
    pow_j *= ratio;
    total += sigma2 * pow_j;
  }
  return total;
}

double empirical_risk(const Estimator& e, const Dataset& data) {
  require(data.count() > 0, ErrorCode::empty_dataset, "no samples");
  require(data.ground_truth.has_value(), ErrorCode::missing_ground_truth,
          "risk evaluation needs ground truth");
  double acc = 0.0;
  for (int t = 0; t < data.count(); ++t) {
    Vec y = data.samples.row(t);
    Vec x = data.ground_truth->row(t);
    acc += (e(y) - x).squaredNorm();
  }
  return acc / (static_cast<double>(data.count()) * data.dim());
}

}  // namespace unsure

#pragma once

#include <memory>

#include "unsure/multipliers.hpp"

namespace unsure {

enum class NoiseFamily { isotropic, diagonal, circulant, poisson_gaussian, hudson };

// Denoisers f(y): posterior mean, cross-validation (prior mean under pixel
// independence), zero-expected-divergence corrections, learned nets, and the
// mmse/identity convex combination.
class Estimator {
 public:
  struct Mmse {
    std::vector<NoisyMarginal> marginals;  // one shared or one per pixel
  };
  struct Cv {
    double prior_mean = 0.0;
  };
  struct Zed {
    ScoreField score;
    MultiplierSolution multipliers;
    NoiseFamily family = NoiseFamily::isotropic;
    std::function<double(double)> a;        // hudson weight
    std::function<double(double)> a_prime;  // optional; fd fallback
    double fd_step = 1e-4;
  };
  struct Combination {
    std::shared_ptr<const Estimator> base;
    double omega = 1.0;  // f = omega * base(y) + (1 - omega) * y
  };
  struct Learned {
    std::function<Vec(const Vec&)> f;
  };

  using Variant = std::variant<Mmse, Cv, Zed, Combination, Learned>;

  explicit Estimator(Variant v) : v_(std::move(v)) {}

  static Estimator mmse(NoisyMarginal marginal);
  static Estimator mmse_per_pixel(std::vector<NoisyMarginal> marginals);
  static Estimator cv(const SignalPrior& prior);
  static Estimator zed(ScoreField score, MultiplierSolution multipliers,
                       NoiseFamily family = NoiseFamily::isotropic);
  static Estimator zed_hudson(ScoreField score, MultiplierSolution multipliers,
                              std::function<double(double)> a,
                              std::function<double(double)> a_prime = {});
  static Estimator learned(std::function<Vec(const Vec&)> f);

  Vec operator()(const Vec& y) const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

Vec apply(const Estimator& e, const Vec& y);

// f = omega * mmse(y) + (1 - omega) * y.
Estimator zed_from_mmse(Estimator mmse, double omega);

// omega = eta / sigma^2 = n sigma^2 / E||mmse(y) - y||^2 for exact marginals.
double omega_analytic(const NoisyMarginal& marginal);
double omega_empirical(const Estimator& mmse, const Dataset& data,
                       double sigma2);

// Closed-form risk of the isotropic zero-divergence estimator.
double zed_mse_from_mmse(double sigma2, double mmse);
double zed_mse_series(double sigma2, double mmse, int terms);

double empirical_risk(const Estimator& e, const Dataset& data);

}  // namespace unsure

#pragma once

#include "unsure/inverse.hpp"
#include "unsure/score.hpp"

namespace unsure {

using VecMap = std::function<Vec(const Vec&)>;

struct IdentityWeight {};
struct DiagonalWeight {
  Vec d;
};
struct CirculantWeight {
  Vec kernel;  // centered, odd length
};
struct ExplicitWeight {
  Mat M;
};

// Weight-matrix role M of the Monte-Carlo divergence tr(M df/dy).
class Weight {
 public:
  using Variant =
      std::variant<IdentityWeight, DiagonalWeight, CirculantWeight,
                   ExplicitWeight>;

  Weight() : v_(IdentityWeight{}) {}
  explicit Weight(Variant v) : v_(std::move(v)) {}

  static Weight identity() { return Weight(); }
  static Weight diagonal(Vec d) { return Weight(DiagonalWeight{std::move(d)}); }
  static Weight circulant(Vec kernel) {
    return Weight(CirculantWeight{std::move(kernel)});
  }
  static Weight dense(Mat M) { return Weight(ExplicitWeight{std::move(M)}); }

  Vec apply(const Vec& b) const;
  double trace(int n) const;
  // Throws NotPSD when the role cannot be a covariance.
  void require_psd(int n) const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

struct DivergenceProbe {
  Vec b;
  double tau = 0.01;
  Weight weight;

  static DivergenceProbe draw(Rng& rng, int n, double tau = 0.01);
};

struct LossValue {
  double total = 0.0;
  double residual = 0.0;
  double divergence_term = 0.0;
  // Unweighted trace estimate of the family's divergence target.
  double divergence_raw = 0.0;
  // Unbiasedness constant (e.g. -n sigma^2) excluded from total.
  double constant = 0.0;
  // d(divergence_term)/d(multiplier components).
  Vec div_grad;
};

LossValue sure_loss(const VecMap& f, const Vec& y, double sigma2,
                    const DivergenceProbe& probe);
LossValue unsure_loss(const VecMap& f, const Vec& y, double eta,
                      const DivergenceProbe& probe);
LossValue correlated_sure_loss(const VecMap& f, const Vec& y,
                               const Weight& sigma,
                               const DivergenceProbe& probe);
LossValue c_unsure_loss(const VecMap& f, const Vec& y, const Vec& eta_kernel,
                        const DivergenceProbe& probe);
LossValue pg_unsure_loss(const VecMap& f, const Vec& y, double eta,
                         double gamma, const DivergenceProbe& probe);
LossValue hudson_loss(const VecMap& f, const Vec& y, double eta,
                      const std::function<double(double)>& a,
                      const DivergenceProbe& probe);
LossValue general_unsure_loss(const VecMap& f, const Vec& y,
                              const Pseudoinverse& pinv, double eta,
                              const DivergenceProbe& probe);

double mc_divergence(const VecMap& f, const Vec& y,
                     const DivergenceProbe& probe);
double mc_divergence(const VecMap& f, const Vec& y,
                     const DivergenceProbe& probe, const Weight& m);

// ||b + tau s(y + tau b)||^2 with tau ~ N(0, delta^2) drawn by the caller.
double ar_dae_loss(const VecMap& s, const Vec& y, const Vec& b, double tau);
double ar_dae_loss_draw(const VecMap& s, const Vec& y, double delta, Rng& rng);

}  // namespace unsure

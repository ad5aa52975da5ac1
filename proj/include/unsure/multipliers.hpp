#pragma once

#include <functional>
#include <optional>

#include "unsure/score.hpp"

namespace unsure {

enum class BasisTag { general, isotropic, diagonal, circulant };

// Span for the covariance search: Sigma_eta = sum_j eta_j Psi_j.
struct CovarianceBasis {
  BasisTag tag = BasisTag::general;
  int radius = 0;  // circulant only
  std::vector<Mat> psi;

  static CovarianceBasis isotropic(int n);
  static CovarianceBasis diagonal(int n);
  // Shift matrices T_lag for lag in [-r, r]; (T_lag x)_i = x_{(i+lag) mod n}.
  static CovarianceBasis circulant(int n, int r);
  static CovarianceBasis general(std::vector<Mat> psi);
};

enum class MultiplierKind { isotropic, diagonal, circulant, poisson_gaussian, hudson, general };

struct MultiplierSolution {
  MultiplierKind kind = MultiplierKind::isotropic;
  Vec eta;  // scalar solutions use size 1; circulant stores the centered kernel
  std::optional<double> gamma;  // poisson-gaussian only
  double objective_value = 0.0;
  double condition_number = 1.0;
  int radius = 0;

  double scalar() const {
    require(eta.size() == 1, ErrorCode::missing_multipliers,
            "solution is not scalar");
    return eta[0];
  }

  Json to_json() const;
  static MultiplierSolution from_json(const Json& j);
};

MultiplierSolution solve_isotropic(const ScoreMoments& moments, int n);
MultiplierSolution solve_diagonal(const ScoreMoments& moments);
MultiplierSolution solve_circulant(const ScoreMoments& moments, int r);
// Dense route for the same system; the DFT solve must match it to 1e-10.
MultiplierSolution solve_circulant_direct(const ScoreMoments& moments, int r);
MultiplierSolution solve_general(const ScoreMoments& moments,
                                 const CovarianceBasis& basis);
MultiplierSolution solve_poisson_gaussian(const ScoreMoments& moments, int n);

struct HudsonOptions {
  std::function<double(double)> a_prime;  // finite differences when empty
  double fd_step = 1e-4;
};

MultiplierSolution solve_hudson(const ScoreField& field, const Dataset& data,
                                const std::function<double(double)>& a,
                                const HudsonOptions& opts = {});

// Lagrangian value -eta^T Q eta + 2 eta^T v for the Gaussian families; used
// for optimality diagnostics and perturbation tests.
double basis_objective(const ScoreMoments& moments,
                       const CovarianceBasis& basis, const Vec& eta);

// Quadratic objective in (eta, gamma) whose stationarity gives the
// Poisson-Gaussian closed form.
double pg_objective(const ScoreMoments& moments, int n, double eta,
                    double gamma);

// Sample statistics entering the Hudson formula: numerator sum E a(y_i),
// denominator -E||s||^2 - 2 sum E a(y_i) ds_i/dy_i.
struct HudsonStats {
  double num = 0.0;
  double den = 0.0;
  double s_sq = 0.0;     // mean ||s||^2
  double weighted_div = 0.0;  // mean sum a(y_i) ds_i/dy_i
};
HudsonStats hudson_stats(const ScoreField& field, const Dataset& data,
                         const std::function<double(double)>& a,
                         const HudsonOptions& opts = {});

}  // namespace unsure

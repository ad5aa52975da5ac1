#pragma once

#include "unsure/multipliers.hpp"

// Brute-force reference solvers used to cross-check the closed-form
// multiplier solutions, plus quadrature risk references. Deliberately
// independent numerical routes: local objective evaluation, gradient ascent,
// grid search, golden section.
namespace unsure::oracle {

// Maximizes -eta^T Q eta + 2 eta^T v by steepest ascent with exact line
// search from random restarts; Q, v are recomputed locally from the basis.
Vec maximize_basis_objective(const ScoreMoments& moments,
                             const CovarianceBasis& basis, int restarts,
                             std::uint64_t seed);

// 200x200 grid search over the quadratic PG objective followed by one
// finite-difference Newton refinement.
std::pair<double, double> maximize_pg_objective(const ScoreMoments& moments,
                                                int n);

// Golden-section maximization of the Hudson objective with locally computed
// statistics and a closing parabolic fit.
double maximize_hudson_objective(const ScoreField& field, const Dataset& data,
                                 const std::function<double(double)>& a);

// E (f(y) - x)^2 for a scalar pixel estimator under prior + isotropic noise,
// by adaptive quadrature.
double scalar_estimator_risk(const SignalPrior& prior, double sigma,
                             const std::function<double(double)>& f);

}  // namespace unsure::oracle

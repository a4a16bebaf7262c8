#pragma once

#include "utamp/denoisers.hpp"
#include "utamp/model_core.hpp"

namespace utamp {

/// Posterior mean under a Gaussian prior: the solution of
/// (A^H A / sigma2 + Diag(1/tau0)) x = A^H y / sigma2 + x0 ./ tau0.
CVector lmmse_estimate(const LinearModel& model, const GaussianPrior& prior);

/// ||lhs(x) - rhs|| / ||rhs|| for the normal equations above.
double normal_equation_residual(const LinearModel& model, const GaussianPrior& prior,
                                const CVector& x);

/// 10 log10(||x_hat - x_true||^2 / ||x_true||^2).
double nmse_db(const CVector& x_hat, const CVector& x_true);

}  // namespace utamp

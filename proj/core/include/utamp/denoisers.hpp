#pragma once

#include <variant>

#include "utamp/types.hpp"

namespace utamp {

/// Independent Gaussian prior x_i ~ N(x0_i, tau0_i).
struct GaussianPrior {
  CVector x0;
  RVector tau0;

  Index size() const { return x0.size(); }
};

GaussianPrior make_gaussian_prior(CVector x0, RVector tau0);
GaussianPrior make_gaussian_prior(Index n, Complex mean, double variance);

/// Spike-and-slab prior x_i ~ (1 - rho) delta_0 + rho N(mu, v), shared by all
/// coordinates.
struct BernoulliGaussianPrior {
  double rho = 1.0;
  Complex mu = 0.0;
  double v = 1.0;
};

BernoulliGaussianPrior make_bg_prior(double rho, Complex mu, double v);

using Prior = std::variant<GaussianPrior, BernoulliGaussianPrior>;

/// Prior mean and variance per coordinate (n is ignored by the Gaussian prior,
/// whose length is fixed, and must match it).
CVector prior_mean(const Prior& prior, Index n);
RVector prior_variance(const Prior& prior, Index n);

/// Noise convention of the scalar channel q = x + w. Variances are per complex
/// dimension in both cases, so only densities differ (used by the BG
/// activation probability).
enum class Field { real, complex };

/// Posterior mean g_x and posterior variance tau_q * g'_x of the scalar
/// channel, plus the average variance.
struct DenoiserOutput {
  CVector mean;
  RVector var_scaled;
  double var_scalar = 0.0;
};

// tau_q may be +infinity, in which case the prior moments are returned.
DenoiserOutput gaussian_denoise(const CVector& q, double tau_q, const GaussianPrior& prior);
DenoiserOutput gaussian_denoise(const CVector& q, const RVector& tau_q, const GaussianPrior& prior);

/// Exact spike-and-slab posterior. The activation probability is evaluated as
/// a log-odds, so large |q|^2 / tau_q does not overflow.
DenoiserOutput bg_denoise(const CVector& q, double tau_q, const BernoulliGaussianPrior& prior,
                          Field field = Field::real);
DenoiserOutput bg_denoise(const CVector& q, const RVector& tau_q,
                          const BernoulliGaussianPrior& prior, Field field = Field::real);

DenoiserOutput denoise(const Prior& prior, const CVector& q, double tau_q, Field field);
DenoiserOutput denoise(const Prior& prior, const CVector& q, const RVector& tau_q, Field field);

enum class VarianceMode { vector, scalar };

/// Per-element variances (vector stepsize) or their average (scalar stepsize).
std::variant<RVector, double> denoiser_variance(const DenoiserOutput& out, VarianceMode mode);

}  // namespace utamp

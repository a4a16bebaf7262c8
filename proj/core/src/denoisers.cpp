#include "utamp/denoisers.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace utamp {

namespace {

void check_q(const CVector& q) {
  if (!q.allFinite()) throw InvalidInput("denoiser input q has non-finite entries");
}

void check_tau(double tau_q) {
  if (std::isnan(tau_q) || !(tau_q > 0.0))
    throw InvalidInput("denoiser variance tau_q must be positive (or +inf)");
}

double log_density(double dist2, double var, Field field) {
  if (field == Field::real) return -0.5 * std::log(2.0 * std::numbers::pi * var) - dist2 / (2.0 * var);
  return -std::log(std::numbers::pi * var) - dist2 / var;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Moments {
  Complex mean;
  double var;
};

Moments bg_prior_moments(const BernoulliGaussianPrior& p) {
  const Complex m = p.rho * p.mu;
  const double second = p.rho * (p.v + std::norm(p.mu));
  return {m, std::max(second - std::norm(m), 0.0)};
}

Moments bg_scalar(Complex q, double tau, const BernoulliGaussianPrior& p, Field field) {
  if (std::isinf(tau)) return bg_prior_moments(p);

  // Slab posterior given the coordinate is active.
  const double slab_var = p.v * tau / (p.v + tau);
  const Complex slab_mean = (q * p.v + p.mu * tau) / (p.v + tau);

  double active = 1.0;
  if (p.rho < 1.0) {
    const double log_odds = std::log(p.rho) - std::log1p(-p.rho) +
                            log_density(std::norm(q - p.mu), p.v + tau, field) -
                            log_density(std::norm(q), tau, field);
    active = sigmoid(log_odds);
  }
  const Complex mean = active * slab_mean;
  // Var = pi (w + |m|^2) - |pi m|^2 = pi w + pi (1 - pi) |m|^2
  const double var = active * slab_var + active * (1.0 - active) * std::norm(slab_mean);
  return {mean, var};
}

DenoiserOutput finish(CVector mean, RVector var) {
  DenoiserOutput out;
  out.var_scalar = var.size() > 0 ? var.mean() : 0.0;
  out.mean = std::move(mean);
  out.var_scaled = std::move(var);
  return out;
}

}  // namespace

GaussianPrior make_gaussian_prior(CVector x0, RVector tau0) {
  if (x0.size() != tau0.size()) throw DimensionMismatch("prior mean and variance lengths differ");
  if (x0.size() < 1) throw InvalidInput("prior must have at least one coordinate");
  if (!x0.allFinite()) throw InvalidInput("prior mean must be finite");
  for (Index i = 0; i < tau0.size(); ++i)
    if (!(tau0[i] > 0.0) || std::isnan(tau0[i]))
      throw InvalidInput("prior variances must be positive");
  return GaussianPrior{std::move(x0), std::move(tau0)};
}

GaussianPrior make_gaussian_prior(Index n, Complex mean, double variance) {
  return make_gaussian_prior(CVector::Constant(n, mean), RVector::Constant(n, variance));
}

BernoulliGaussianPrior make_bg_prior(double rho, Complex mu, double v) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("bg prior requires 0 < rho <= 1");
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("bg prior requires v > 0");
  if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag())) throw InvalidInput("bg prior mean must be finite");
  return BernoulliGaussianPrior{rho, mu, v};
}

CVector prior_mean(const Prior& prior, Index n) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    if (g->size() != n) throw DimensionMismatch("Gaussian prior length differs from N");
    return g->x0;
  }
  return CVector::Constant(n, bg_prior_moments(std::get<BernoulliGaussianPrior>(prior)).mean);
}

RVector prior_variance(const Prior& prior, Index n) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    if (g->size() != n) throw DimensionMismatch("Gaussian prior length differs from N");
    return g->tau0;
  }
  return RVector::Constant(n, bg_prior_moments(std::get<BernoulliGaussianPrior>(prior)).var);
}

DenoiserOutput gaussian_denoise(const CVector& q, double tau_q, const GaussianPrior& prior) {
  return gaussian_denoise(q, RVector::Constant(q.size(), tau_q), prior);
}

DenoiserOutput gaussian_denoise(const CVector& q, const RVector& tau_q, const GaussianPrior& prior) {
  if (q.size() != prior.size() || tau_q.size() != q.size())
    throw DimensionMismatch("gaussian_denoise: input lengths differ");
  check_q(q);
  CVector mean(q.size());
  RVector var(q.size());
  for (Index i = 0; i < q.size(); ++i) {
    check_tau(tau_q[i]);
    const double prec_q = 1.0 / tau_q[i];  // 0 when tau_q = inf
    const double prec_0 = 1.0 / prior.tau0[i];
    var[i] = 1.0 / (prec_q + prec_0);
    mean[i] = (q[i] * prec_q + prior.x0[i] * prec_0) * var[i];
  }
  return finish(std::move(mean), std::move(var));
}

DenoiserOutput bg_denoise(const CVector& q, double tau_q, const BernoulliGaussianPrior& prior,
                          Field field) {
  return bg_denoise(q, RVector::Constant(q.size(), tau_q), prior, field);
}

DenoiserOutput bg_denoise(const CVector& q, const RVector& tau_q,
                          const BernoulliGaussianPrior& prior, Field field) {
  if (tau_q.size() != q.size()) throw DimensionMismatch("bg_denoise: input lengths differ");
  check_q(q);
  CVector mean(q.size());
  RVector var(q.size());
  for (Index i = 0; i < q.size(); ++i) {
    check_tau(tau_q[i]);
    const Moments m = bg_scalar(q[i], tau_q[i], prior, field);
    mean[i] = m.mean;
    var[i] = m.var;
  }
  return finish(std::move(mean), std::move(var));
}

DenoiserOutput denoise(const Prior& prior, const CVector& q, double tau_q, Field field) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) return gaussian_denoise(q, tau_q, *g);
  return bg_denoise(q, tau_q, std::get<BernoulliGaussianPrior>(prior), field);
}

DenoiserOutput denoise(const Prior& prior, const CVector& q, const RVector& tau_q, Field field) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) return gaussian_denoise(q, tau_q, *g);
  return bg_denoise(q, tau_q, std::get<BernoulliGaussianPrior>(prior), field);
}

std::variant<RVector, double> denoiser_variance(const DenoiserOutput& out, VarianceMode mode) {
  if (mode == VarianceMode::vector) return out.var_scaled;
  return out.var_scaled.size() > 0 ? out.var_scaled.mean() : 0.0;
}

}  // namespace utamp

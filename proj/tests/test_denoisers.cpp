#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "utamp/denoisers.hpp"
#include "utamp/prior_spec.hpp"

using namespace utamp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CVector one(Complex v) { return CVector::Constant(1, v); }

double g_mean(const Prior& prior, double q, double tau) {
  return denoise(prior, one(q), tau, Field::real).mean[0].real();
}

}  // namespace

TEST(GaussianDenoise, EqualPrecisionAverage) {
  const auto out = gaussian_denoise(one(1.0), 1.0, make_gaussian_prior(1, 0.0, 1.0));
  EXPECT_DOUBLE_EQ(out.mean[0].real(), 0.5);
  EXPECT_DOUBLE_EQ(out.var_scaled[0], 0.5);
  EXPECT_DOUBLE_EQ(out.var_scalar, 0.5);
}

TEST(GaussianDenoise, FlatPriorLimitReturnsObservation) {
  const auto out = gaussian_denoise(one(3.0), 0.7, make_gaussian_prior(1, 0.0, 1e30));
  EXPECT_NEAR(out.mean[0].real(), 3.0, 1e-12);
  EXPECT_NEAR(out.var_scaled[0], 0.7, 1e-12);
}

TEST(GaussianDenoise, InfiniteChannelVarianceReturnsPrior) {
  const GaussianPrior prior = make_gaussian_prior(one(Complex(1.0, -2.0)), RVector::Constant(1, 3.0));
  const auto out = gaussian_denoise(one(5.0), kInf, prior);
  EXPECT_EQ(out.mean[0], Complex(1.0, -2.0));
  EXPECT_EQ(out.var_scaled[0], 3.0);
}

TEST(GaussianDenoise, MatchesQuadratureAtKnownPoint) {
  const auto out = gaussian_denoise(one(2.0), 0.5, make_gaussian_prior(1, 1.0, 2.0));
  const oracle::Moments ref = oracle::gaussian_posterior(2.0, 0.5, 1.0, 2.0);
  EXPECT_NEAR(out.mean[0].real(), ref.mean, 1e-10);
  EXPECT_NEAR(out.var_scaled[0], ref.var, 1e-10);
  EXPECT_NEAR(out.mean[0].real(), 1.8, 1e-14);
  EXPECT_NEAR(out.var_scaled[0], 0.4, 1e-14);
}

TEST(GaussianDenoise, VectorChannelVariance) {
  RVector tau(2);
  tau << 1.0, kInf;
  const auto out = gaussian_denoise(CVector::Constant(2, 1.0), tau, make_gaussian_prior(2, 0.0, 1.0));
  EXPECT_DOUBLE_EQ(out.mean[0].real(), 0.5);
  EXPECT_DOUBLE_EQ(out.mean[1].real(), 0.0);
  EXPECT_DOUBLE_EQ(out.var_scalar, 0.75);
}

TEST(GaussianDenoise, RejectsBadInput) {
  const GaussianPrior prior = make_gaussian_prior(1, 0.0, 1.0);
  EXPECT_THROW(gaussian_denoise(one(std::nan("")), 1.0, prior), InvalidInput);
  EXPECT_THROW(gaussian_denoise(one(1.0), 0.0, prior), InvalidInput);
  EXPECT_THROW(gaussian_denoise(CVector::Ones(2), 1.0, prior), DimensionMismatch);
  EXPECT_THROW(make_gaussian_prior(1, 0.0, 0.0), InvalidInput);
}

TEST(GaussianDenoise, VarianceBoundedAndMonotoneInChannelVariance) {
  const GaussianPrior prior = make_gaussian_prior(1, 0.3, 2.0);
  double previous = 0.0;
  for (double tau = 1e-6; tau < 1e6; tau *= 3.0) {
    const double v = gaussian_denoise(one(1.0), tau, prior).var_scaled[0];
    EXPECT_GE(v, previous);
    EXPECT_LE(v, std::min(tau, 2.0));
    previous = v;
  }
}

TEST(BgDenoise, SlabOnlyMatchesGaussian) {
  std::mt19937_64 rng(1);
  const CVector q = oracle::random_complex(6, 1, rng);
  for (Field field : {Field::real, Field::complex}) {
    const auto bg = bg_denoise(q, 0.4, make_bg_prior(1.0, Complex(0.5, 0.1), 2.0), field);
    const auto g = gaussian_denoise(q, 0.4, make_gaussian_prior(6, Complex(0.5, 0.1), 2.0));
    EXPECT_LE((bg.mean - g.mean).norm(), 1e-14);
    EXPECT_LE((bg.var_scaled - g.var_scaled).norm(), 1e-14);
  }
}

TEST(BgDenoise, SpikeOnlyLimitShrinksToZero) {
  const auto out = bg_denoise(one(1.5), 1.0, make_bg_prior(1e-12, 0.0, 1.0));
  EXPECT_NEAR(out.mean[0].real(), 0.0, 1e-10);
}

TEST(BgDenoise, MatchesQuadratureAtKnownPoint) {
  const auto out = bg_denoise(one(1.0), 1.0, make_bg_prior(0.5, 0.0, 1.0));
  const oracle::Moments ref = oracle::bg_posterior(1.0, 1.0, 0.5, 0.0, 1.0);
  EXPECT_NEAR(out.mean[0].real(), ref.mean, 1e-8);
  EXPECT_NEAR(out.var_scaled[0], ref.var, 1e-8);
}

TEST(BgDenoise, LargeObservationDoesNotOverflow) {
  const auto out = bg_denoise(one(1e8), 1e-6, make_bg_prior(0.01, 0.0, 1.0));
  EXPECT_TRUE(std::isfinite(out.mean[0].real()));
  EXPECT_NEAR(out.mean[0].real(), 1e8 / (1.0 + 1e-6), 1e-3);
  const auto zero = bg_denoise(one(0.0), 1e-30, make_bg_prior(0.5, 3.0, 1.0));
  EXPECT_TRUE(std::isfinite(zero.var_scaled[0]));
  EXPECT_NEAR(zero.mean[0].real(), 0.0, 1e-12);
}

TEST(BgDenoise, InfiniteChannelVarianceReturnsPriorMoments) {
  const auto out = bg_denoise(one(4.0), kInf, make_bg_prior(0.25, 2.0, 1.0));
  EXPECT_DOUBLE_EQ(out.mean[0].real(), 0.5);
  EXPECT_DOUBLE_EQ(out.var_scaled[0], 0.25 * 5.0 - 0.25);
}

TEST(BgDenoise, ComplexFieldMatchesTwoDimensionalQuadrature) {
  const Complex q(0.8, -0.4);
  const Complex mu(0.3, 0.2);
  const auto out = bg_denoise(one(q), 0.5, make_bg_prior(0.3, mu, 1.5), Field::complex);
  const oracle::ComplexMoments ref = oracle::bg_posterior_complex(q, 0.5, 0.3, mu, 1.5);
  EXPECT_NEAR(std::abs(out.mean[0] - ref.mean), 0.0, 1e-7);
  EXPECT_NEAR(out.var_scaled[0], ref.var, 1e-7);
}

TEST(BgDenoise, RejectsBadPriors) {
  EXPECT_THROW(make_bg_prior(0.0, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(make_bg_prior(1.5, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(make_bg_prior(0.5, 0.0, -1.0), InvalidInput);
  EXPECT_THROW(bg_denoise(one(1.0), -1.0, make_bg_prior(0.5, 0.0, 1.0)), InvalidInput);
}

TEST(DenoiserVariance, ScalarModeAverages) {
  DenoiserOutput out;
  out.var_scaled = RVector(2);
  out.var_scaled << 1.0, 3.0;
  EXPECT_EQ(std::get<double>(denoiser_variance(out, VarianceMode::scalar)), 2.0);
  out.var_scaled = RVector(3);
  out.var_scaled << 0.4, 0.5, 0.6;
  EXPECT_NEAR(std::get<double>(denoiser_variance(out, VarianceMode::scalar)), 0.5, 1e-15);
  EXPECT_EQ(std::get<RVector>(denoiser_variance(out, VarianceMode::vector)), out.var_scaled);
  out.var_scaled = RVector::Constant(4, 0.7);
  EXPECT_DOUBLE_EQ(std::get<double>(denoiser_variance(out, VarianceMode::scalar)), 0.7);
}

TEST(DenoiserProperties, RandomDrawsMatchQuadrature) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 100; ++draw) {
    const double q = 6.0 * u(rng) - 3.0;
    const double tau = 0.05 + 2.0 * u(rng);
    const double x0 = 2.0 * u(rng) - 1.0;
    const double tau0 = 0.05 + 3.0 * u(rng);
    const auto g = gaussian_denoise(one(q), tau, make_gaussian_prior(1, x0, tau0));
    const oracle::Moments gr = oracle::gaussian_posterior(q, tau, x0, tau0);
    EXPECT_NEAR(g.mean[0].real(), gr.mean, 1e-8);
    EXPECT_NEAR(g.var_scaled[0], gr.var, 1e-8);

    const double rho = 0.02 + 0.96 * u(rng);
    const double mu = 2.0 * u(rng) - 1.0;
    const double v = 0.1 + 2.0 * u(rng);
    const auto b = bg_denoise(one(q), tau, make_bg_prior(rho, mu, v));
    const oracle::Moments br = oracle::bg_posterior(q, tau, rho, mu, v);
    EXPECT_NEAR(b.mean[0].real(), br.mean, 1e-6);
    EXPECT_NEAR(b.var_scaled[0], br.var, 1e-6);
    EXPECT_GE(b.var_scaled[0], 0.0);
  }
}

TEST(DenoiserProperties, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 100; ++draw) {
    const double q = 6.0 * u(rng) - 3.0;
    const double tau = 0.05 + 2.0 * u(rng);
    const Prior priors[] = {make_gaussian_prior(1, 2.0 * u(rng) - 1.0, 0.05 + 3.0 * u(rng)),
                            make_bg_prior(0.05 + 0.9 * u(rng), 2.0 * u(rng) - 1.0, 0.1 + 2.0 * u(rng))};
    for (const Prior& prior : priors) {
      const double h = 1e-6 * (1.0 + std::abs(q));
      const double fd = (g_mean(prior, q + h, tau) - g_mean(prior, q - h, tau)) / (2.0 * h);
      const double analytic = denoise(prior, one(q), tau, Field::real).var_scaled[0] / tau;
      EXPECT_NEAR(analytic, fd, 1e-5 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST(PriorSpec, ParsesBothFamilies) {
  const Prior g = parse_prior("gaussian(x0=0.5, tau0=2)", 3);
  ASSERT_TRUE(std::holds_alternative<GaussianPrior>(g));
  EXPECT_EQ(std::get<GaussianPrior>(g).x0, CVector::Constant(3, 0.5));
  EXPECT_EQ(std::get<GaussianPrior>(g).tau0, RVector::Constant(3, 2.0));
  const Prior d = parse_prior("gaussian", 2);
  EXPECT_EQ(std::get<GaussianPrior>(d).tau0, RVector::Ones(2));

  const Prior b = parse_prior("bg(rho=0.2,v=3)", 4);
  ASSERT_TRUE(std::holds_alternative<BernoulliGaussianPrior>(b));
  EXPECT_EQ(std::get<BernoulliGaussianPrior>(b).rho, 0.2);
  EXPECT_EQ(std::get<BernoulliGaussianPrior>(b).mu, Complex(0.0));
  EXPECT_EQ(std::get<BernoulliGaussianPrior>(b).v, 3.0);
  EXPECT_EQ(std::get<BernoulliGaussianPrior>(parse_prior("bg()", 4)).rho, 0.1);
}

TEST(PriorSpec, RejectsMalformedText) {
  EXPECT_THROW(parse_prior("laplace(b=1)", 2), ParseError);
  EXPECT_THROW(parse_prior("gaussian(x0=1", 2), ParseError);
  EXPECT_THROW(parse_prior("gaussian(foo=1)", 2), ParseError);
  EXPECT_THROW(parse_prior("bg(rho)", 2), ParseError);
  EXPECT_THROW(parse_prior("bg(rho=2)", 2), InvalidInput);
}

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "utamp/denoisers.hpp"
#include "utamp/model_core.hpp"

namespace utamp {

/// Limit of the UT-AMP variance recursion under a Gaussian prior.
struct VarianceFixedPoint {
  double tau_x = 0.0;
  double tau_q = 0.0;  // +inf when every lambda_i is zero
  Index iterations_used = 0;
  bool converged = false;
};

struct FixedPointOptions {
  Index max_iters = 100000;
  double rel_tol = 1e-12;  // stop once |delta tau_x| <= rel_tol * (1 + tau_x)
};

/// Iterates
///   1/tau_q      = (1/N) sum_i |l_i|^2 / (tau_x |l_i|^2 + sigma2)
///   tau_x'       = (1/N) sum_i 1 / (1/tau_q + 1/tau0_i)
/// from tau_x = mean(tau0). The map is increasing with a unique fixed point in
/// (0, mean(tau0)]. The recursion result is polished by bisection, since a
/// tiny sigma2 makes it contract arbitrarily slowly.
VarianceFixedPoint variance_fixed_point(const CVector& lambda, double sigma2,
                                        const GaussianPrior& prior, Index M, Index N,
                                        const FixedPointOptions& options = {});

struct SpectralCoefficients {
  double alpha = 0.0;
  RVector betas;  // length min(M, N)
  Index M = 0;
  Index N = 0;
};

/// beta_i = tau_x |l_i|^2 / (tau_x |l_i|^2 + sigma2), alpha = sum(beta) / N.
SpectralCoefficients spectral_coefficients(const VarianceFixedPoint& fp, const CVector& lambda,
                                           double sigma2, Index M, Index N);

enum class ShapeCase { square, tall, fat };
const char* to_string(ShapeCase c);

struct ConvergenceCertificate {
  std::optional<VarianceFixedPoint> fixed_point;
  SpectralCoefficients coefficients;
  std::vector<Complex> eigenvalues;  // M + N entries
  double spectral_radius = 0.0;
  bool converges = false;
  ShapeCase shape = ShapeCase::square;
  /// Largest closed-form vs dense eigenvalue mismatch, when checked.
  std::optional<double> numeric_discrepancy;

  /// Whether every |eta| <= alpha (not guaranteed; reported alongside).
  bool radius_within_alpha() const;
};

/// Roots of eta^2 - alpha eta + alpha beta_i for every i, plus M - N zeros
/// (tall) or N - M copies of alpha (fat).
ConvergenceCertificate closed_form_eigenvalues(const SpectralCoefficients& coeff);

/// Dense (M + N) x (M + N) matrix mapping [s^{t-1}; x^t] to [s^t; x^{t+1}] at
/// the variance fixed point (affine offset dropped).
CMatrix numeric_iteration_matrix(const Factorization& fact, const VarianceFixedPoint& fp,
                                 const SpectralCoefficients& coeff, double sigma2);

/// Smallest achievable max |a_i - b_pi(i)| over bijections pi.
double eigenvalue_matching_error(const std::vector<Complex>& a, const std::vector<Complex>& b);

/// Eigenvalues of a dense matrix.
std::vector<Complex> dense_eigenvalues(const CMatrix& m);

struct CertifyOptions {
  bool check_numeric = false;
  FixedPointOptions fixed_point;
};

/// variance_fixed_point -> spectral_coefficients -> closed_form_eigenvalues.
/// Throws UnsupportedPrior for anything but a Gaussian prior.
ConvergenceCertificate certify(const Factorization& fact, const Prior& prior, double sigma2,
                               const CertifyOptions& options = {});
ConvergenceCertificate certify(const CMatrix& A, const Prior& prior, double sigma2,
                               const CertifyOptions& options = {});

/// "key: value" text report.
void write_certificate(std::ostream& out, const ConvergenceCertificate& cert);

}  // namespace utamp

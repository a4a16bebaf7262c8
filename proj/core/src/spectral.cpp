#include "utamp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "utamp/matrix_io.hpp"

namespace utamp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(const CVector& lambda, Index M, Index N) {
  if (M < 1 || N < 1) throw InvalidInput("dimensions must be positive");
  if (lambda.size() != std::min(M, N)) throw DimensionMismatch("lambda length must be min(M, N)");
}

// Kuhn's augmenting-path test: does a perfect matching exist using only
// pairs with |a_i - b_j| <= limit?
bool has_perfect_matching(const std::vector<Complex>& a, const std::vector<Complex>& b,
                          double limit) {
  const std::size_t n = a.size();
  std::vector<long> match_b(n, -1);
  std::vector<char> seen(n);
  std::function<bool(std::size_t)> augment = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (seen[j] || std::abs(a[i] - b[j]) > limit) continue;
      seen[j] = 1;
      if (match_b[j] < 0 || augment(static_cast<std::size_t>(match_b[j]))) {
        match_b[j] = static_cast<long>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    if (!augment(i)) return false;
  }
  return true;
}

}  // namespace

VarianceFixedPoint variance_fixed_point(const CVector& lambda, double sigma2,
                                        const GaussianPrior& prior, Index M, Index N,
                                        const FixedPointOptions& options) {
  check_dims(lambda, M, N);
  if (!(sigma2 > 0.0)) throw InvalidInput("sigma2 must be positive");
  if (prior.size() != N) throw DimensionMismatch("prior length differs from N");

  const RVector power = lambda.cwiseAbs2();
  const double n = static_cast<double>(N);
  const RVector prior_precision = prior.tau0.cwiseInverse();

  auto inverse_tau_q = [&](double tau_x) {
    return (power.array() / (tau_x * power.array() + sigma2)).sum() / n;
  };
  auto update = [&](double tau_x) {
    const double inv_q = inverse_tau_q(tau_x);
    return (prior_precision.array() + inv_q).inverse().sum() / n;
  };

  VarianceFixedPoint fp;
  fp.tau_x = prior.tau0.mean();
  if (inverse_tau_q(fp.tau_x) == 0.0) {
    fp.tau_q = kInf;
    fp.converged = true;
    return fp;
  }

  for (Index it = 0; it < options.max_iters; ++it) {
    const double next = update(fp.tau_x);
    ++fp.iterations_used;
    const double delta = std::abs(next - fp.tau_x);
    fp.tau_x = next;
    if (delta <= options.rel_tol * (1.0 + fp.tau_x)) {
      fp.converged = true;
      break;
    }
  }

  // The step size says little about the distance to the root when the map
  // contracts slowly (tiny sigma2), so finish by bisection. update(t) - t is
  // decreasing with update(0) > 0 and update(mean(tau0)) <= mean(tau0).
  double lo = 0.0;
  double hi = prior.tau0.mean();
  (update(fp.tau_x) > fp.tau_x ? lo : hi) = fp.tau_x;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (update(mid) > mid ? lo : hi) = mid;
  }
  fp.tau_x = 0.5 * (lo + hi);
  fp.converged = std::abs(update(fp.tau_x) - fp.tau_x) <= options.rel_tol * (1.0 + fp.tau_x);
  fp.tau_q = 1.0 / inverse_tau_q(fp.tau_x);
  return fp;
}

SpectralCoefficients spectral_coefficients(const VarianceFixedPoint& fp, const CVector& lambda,
                                           double sigma2, Index M, Index N) {
  check_dims(lambda, M, N);
  if (!fp.converged) throw InvalidInput("spectral coefficients need a converged variance fixed point");
  if (!(sigma2 > 0.0)) throw InvalidInput("sigma2 must be positive");

  SpectralCoefficients c;
  c.M = M;
  c.N = N;
  const RVector scaled = fp.tau_x * lambda.cwiseAbs2();
  c.betas = scaled.array() / (scaled.array() + sigma2);
  c.alpha = c.betas.sum() / static_cast<double>(N);
  return c;
}

const char* to_string(ShapeCase c) {
  switch (c) {
    case ShapeCase::square: return "square";
    case ShapeCase::tall: return "tall";
    case ShapeCase::fat: return "fat";
  }
  return "?";
}

bool ConvergenceCertificate::radius_within_alpha() const {
  // Relative slack for roots that equal alpha exactly.
  return spectral_radius <= coefficients.alpha * (1.0 + 1e-12);
}

ConvergenceCertificate closed_form_eigenvalues(const SpectralCoefficients& coeff) {
  ConvergenceCertificate cert;
  cert.coefficients = coeff;
  const double a = coeff.alpha;
  cert.eigenvalues.reserve(static_cast<std::size_t>(coeff.M + coeff.N));
  for (Index i = 0; i < coeff.betas.size(); ++i) {
    const double disc = a * a - 4.0 * a * coeff.betas[i];
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      cert.eigenvalues.emplace_back(0.5 * (a + root), 0.0);
      cert.eigenvalues.emplace_back(0.5 * (a - root), 0.0);
    } else {
      const double root = std::sqrt(-disc);
      cert.eigenvalues.emplace_back(0.5 * a, 0.5 * root);
      cert.eigenvalues.emplace_back(0.5 * a, -0.5 * root);
    }
  }
  if (coeff.M > coeff.N) {
    cert.shape = ShapeCase::tall;
    cert.eigenvalues.insert(cert.eigenvalues.end(), static_cast<std::size_t>(coeff.M - coeff.N),
                            Complex(0.0, 0.0));
  } else if (coeff.M < coeff.N) {
    cert.shape = ShapeCase::fat;
    cert.eigenvalues.insert(cert.eigenvalues.end(), static_cast<std::size_t>(coeff.N - coeff.M),
                            Complex(a, 0.0));
  }
  for (const Complex& e : cert.eigenvalues)
    cert.spectral_radius = std::max(cert.spectral_radius, std::abs(e));
  cert.converges = cert.spectral_radius < 1.0;
  return cert;
}

CMatrix numeric_iteration_matrix(const Factorization& fact, const VarianceFixedPoint& fp,
                                 const SpectralCoefficients& coeff, double sigma2) {
  const Index M = fact.rows();
  const Index N = fact.cols();
  if (coeff.M != M || coeff.N != N || coeff.betas.size() != fact.lambda().size())
    throw DimensionMismatch("coefficients do not match the factorization");
  if (!fp.converged) throw InvalidInput("iteration matrix is defined at the variance fixed point only");

  const double tau = fp.tau_x;
  const CMatrix L = fact.dense_lambda();
  const CMatrix V = fact.dense_V();
  const RVector lambda_p = padded_power(fact.lambda(), M);
  const CVector d = (tau * lambda_p.array() + sigma2).inverse().matrix().cast<Complex>();
  const auto D = d.asDiagonal();
  const CMatrix LLh = L * L.adjoint();
  const CMatrix LhDL = L.adjoint() * D * L;

  CMatrix C(M + N, M + N);
  C.topLeftCorner(M, M) = tau * (D * LLh);
  C.topRightCorner(M, N) = -(D * L * V);
  C.bottomLeftCorner(N, M) = tau * tau * V.adjoint() * L.adjoint() * D * LLh;
  C.bottomRightCorner(N, N) = coeff.alpha * CMatrix::Identity(N, N) - tau * V.adjoint() * LhDL * V;
  return C;
}

std::vector<Complex> dense_eigenvalues(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> solver(m, false);
  if (solver.info() != Eigen::Success) throw Error("dense eigensolver did not converge");
  const CVector ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double eigenvalue_matching_error(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("eigenvalue multisets differ in size");
  if (a.empty()) return 0.0;
  std::vector<double> candidates;
  candidates.reserve(a.size() * b.size());
  for (const Complex& x : a)
    for (const Complex& y : b) candidates.push_back(std::abs(x - y));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  // Bottleneck assignment: smallest threshold admitting a perfect matching.
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (has_perfect_matching(a, b, candidates[mid])) hi = mid;
    else lo = mid + 1;
  }
  return candidates[lo];
}

ConvergenceCertificate certify(const Factorization& fact, const Prior& prior, double sigma2,
                               const CertifyOptions& options) {
  const auto* gaussian = std::get_if<GaussianPrior>(&prior);
  if (gaussian == nullptr)
    throw UnsupportedPrior("convergence certification applies to Gaussian priors only");
  const Index M = fact.rows();
  const Index N = fact.cols();
  const VarianceFixedPoint fp =
      variance_fixed_point(fact.lambda(), sigma2, *gaussian, M, N, options.fixed_point);
  if (!fp.converged) throw Error("variance recursion did not reach its fixed point");
  const SpectralCoefficients coeff = spectral_coefficients(fp, fact.lambda(), sigma2, M, N);
  ConvergenceCertificate cert = closed_form_eigenvalues(coeff);
  cert.fixed_point = fp;
  if (options.check_numeric) {
    const CMatrix C = numeric_iteration_matrix(fact, fp, coeff, sigma2);
    cert.numeric_discrepancy = eigenvalue_matching_error(cert.eigenvalues, dense_eigenvalues(C));
  }
  return cert;
}

ConvergenceCertificate certify(const CMatrix& A, const Prior& prior, double sigma2,
                               const CertifyOptions& options) {
  if (!std::holds_alternative<GaussianPrior>(prior))
    throw UnsupportedPrior("convergence certification applies to Gaussian priors only");
  return certify(svd_factorize(A), prior, sigma2, options);
}

void write_certificate(std::ostream& out, const ConvergenceCertificate& cert) {
  auto num = [](double v) -> std::string {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
  };
  const auto& c = cert.coefficients;
  out << "M: " << c.M << '\n';
  out << "N: " << c.N << '\n';
  out << "case: " << to_string(cert.shape) << '\n';
  if (cert.fixed_point) {
    out << "tau_x: " << num(cert.fixed_point->tau_x) << '\n';
    out << "tau_q: " << num(cert.fixed_point->tau_q) << '\n';
    out << "fixed_point_iterations: " << cert.fixed_point->iterations_used << '\n';
  }
  out << "alpha: " << num(c.alpha) << '\n';
  out << "beta:";
  for (Index i = 0; i < c.betas.size(); ++i) out << ' ' << num(c.betas[i]);
  out << '\n';
  out << "eigenvalues:";
  for (const Complex& e : cert.eigenvalues) out << " (" << num(e.real()) << ',' << num(e.imag()) << ')';
  out << '\n';
  out << "spectral_radius: " << num(cert.spectral_radius) << '\n';
  out << "radius_within_alpha: " << (cert.radius_within_alpha() ? "true" : "false") << '\n';
  if (cert.numeric_discrepancy) out << "numeric_discrepancy: " << num(*cert.numeric_discrepancy) << '\n';
  out << "converges: " << (cert.converges ? "true" : "false") << '\n';
}

}  // namespace utamp

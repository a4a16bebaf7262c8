#pragma once

#include <memory>
#include <optional>

#include "utamp/types.hpp"

namespace utamp {

/// Observed system y = A x + n with white noise of variance sigma2.
struct LinearModel {
  CMatrix A;
  CVector y;
  double sigma2 = 1.0;
  std::optional<CVector> x_true;  // evaluation only

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
  /// A, y (and x_true) carry no imaginary parts.
  bool is_real() const;
};

/// Validates dimensions, finiteness and sigma2 > 0.
LinearModel make_linear_model(CMatrix A, CVector y, double sigma2,
                              std::optional<CVector> x_true = std::nullopt);

enum class FactorizationKind { svd, dft };

const char* to_string(FactorizationKind kind);

namespace detail {
struct FactorizationData;
}

/// A = U * Lambda * V with U (MxM) and V (NxN) unitary and Lambda rectangular
/// diagonal. Note V is the conjugate transpose of the conventional
/// right-singular-vector matrix.
///
/// For kind == dft the unitary factors are never stored: U = F^H, V = F with F
/// the normalized DFT matrix, and every product goes through an FFT.
/// Copies share the underlying immutable data.
class Factorization {
public:
  FactorizationKind kind() const;
  Index rows() const;  // M
  Index cols() const;  // N
  /// Diagonal of Lambda, length min(M, N).
  const CVector& lambda() const;

  CVector apply_U(const CVector& z) const;   // U z,   length M
  CVector apply_UH(const CVector& y) const;  // U^H y, length M
  CVector apply_V(const CVector& x) const;   // V x,   length N
  CVector apply_VH(const CVector& z) const;  // V^H z, length N

  /// Dense factors, materialized on request (O(N^2) for dft).
  CMatrix dense_U() const;
  CMatrix dense_V() const;
  /// Dense rectangular M x N Lambda.
  CMatrix dense_lambda() const;
  /// U * Lambda * V.
  CMatrix reconstruct() const;

  static Factorization from_parts(CMatrix U, CVector lambda, CMatrix V);

private:
  friend Factorization svd_factorize(const CMatrix& A);
  friend Factorization circulant_factorize(const CVector& first_column);
  explicit Factorization(std::shared_ptr<const detail::FactorizationData> data);

  std::shared_ptr<const detail::FactorizationData> data_;
};

/// Dense SVD. lambda is real, nonnegative and sorted descending.
Factorization svd_factorize(const CMatrix& A);

/// DFT diagonalization of the circulant matrix whose first column is given.
/// lambda[k] = sum_j c_j exp(-2 pi i j k / N) (unnormalized).
Factorization circulant_factorize(const CVector& first_column);

/// Dense circulant matrix C[i][j] = c[(i - j) mod N].
CMatrix circulant_matrix(const CVector& first_column);

/// First column of A if A is square and circulant to within tol (relative to
/// max |a_ij|); nullopt otherwise.
std::optional<CVector> circulant_first_column(const CMatrix& A, double tol = 1e-12);

/// ||U Lambda V - A||_F / ||A||_F (absolute error when A == 0).
double reconstruction_error(const Factorization& fact, const CMatrix& A);

/// Max elementwise deviation of U^H U and V V^H from I.
double unitarity_error(const Factorization& fact);

/// The model after left-multiplying by U^H: r = Lambda V x + w.
struct TransformedModel {
  CVector r;
  Factorization fact;
  double sigma2 = 1.0;
  RVector lambda_p;  // Lambda Lambda^H 1, length M
  RVector lambda_s;  // Lambda^H Lambda 1, length N

  Index rows() const { return r.size(); }
  Index cols() const { return lambda_s.size(); }
  const CVector& lambda() const { return fact.lambda(); }
  /// Lambda V x.
  CVector forward(const CVector& x) const;
  /// V^H Lambda^H s.
  CVector adjoint(const CVector& s) const;
};

TransformedModel unitary_transform(const LinearModel& model, const Factorization& fact);

/// Squared magnitudes of lambda padded with zeros to `length`.
RVector padded_power(const CVector& lambda, Index length);

/// |C|^2 d, which equals the diagonal of C Diag(d) C^H.
RVector scaled_gram_diagonal(const CMatrix& C, const RVector& d);

}  // namespace utamp

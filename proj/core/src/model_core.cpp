#include "utamp/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <vector>

#include <fftw3.h>

namespace utamp {

namespace detail {

// The FFTW planner is not reentrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
public:
  FftPlan(int n, int sign) : n_(n) {
    std::vector<Complex> in(static_cast<std::size_t>(n));
    std::vector<Complex> out(static_cast<std::size_t>(n));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()), sign,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw FactorizationFailed("FFTW could not create a plan");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  // Unnormalized transform.
  CVector operator()(const CVector& x) const {
    CVector in = x;  // FFTW takes a non-const input pointer
    CVector out(n_);
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

private:
  int n_;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

namespace {

void require_length(const CVector& v, Index n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << ": expected length " << n << ", got " << v.size();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

namespace detail {

struct FactorizationData {
  FactorizationKind kind = FactorizationKind::svd;
  Index M = 0;
  Index N = 0;
  CVector lambda;
  // svd only
  CMatrix U;
  CMatrix V;
  // dft only
  std::shared_ptr<const FftPlan> forward;   // exp(-2 pi i jk/N)
  std::shared_ptr<const FftPlan> backward;  // exp(+2 pi i jk/N)
};

}  // namespace detail

bool LinearModel::is_real() const {
  return is_real_valued(A) && is_real_valued(y) && (!x_true || is_real_valued(*x_true));
}

LinearModel make_linear_model(CMatrix A, CVector y, double sigma2,
                              std::optional<CVector> x_true) {
  if (A.rows() < 1 || A.cols() < 1) throw InvalidInput("model matrix must be at least 1x1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw InvalidInput("noise variance sigma2 must be positive and finite");
  require_length(y, A.rows(), "observation y");
  if (x_true) require_length(*x_true, A.cols(), "ground truth x_true");
  if (!A.allFinite() || !y.allFinite()) throw InvalidInput("model contains non-finite entries");
  return LinearModel{std::move(A), std::move(y), sigma2, std::move(x_true)};
}

const char* to_string(FactorizationKind kind) {
  return kind == FactorizationKind::svd ? "svd" : "dft";
}

Factorization::Factorization(std::shared_ptr<const detail::FactorizationData> data)
    : data_(std::move(data)) {}

FactorizationKind Factorization::kind() const { return data_->kind; }
Index Factorization::rows() const { return data_->M; }
Index Factorization::cols() const { return data_->N; }
const CVector& Factorization::lambda() const { return data_->lambda; }

CVector Factorization::apply_U(const CVector& z) const {
  require_length(z, data_->M, "apply_U");
  if (data_->kind == FactorizationKind::svd) return data_->U * z;
  // U = F^H
  return (*data_->backward)(z) / std::sqrt(static_cast<double>(data_->M));
}

CVector Factorization::apply_UH(const CVector& y) const {
  require_length(y, data_->M, "apply_UH");
  if (data_->kind == FactorizationKind::svd) return data_->U.adjoint() * y;
  return (*data_->forward)(y) / std::sqrt(static_cast<double>(data_->M));
}

CVector Factorization::apply_V(const CVector& x) const {
  require_length(x, data_->N, "apply_V");
  if (data_->kind == FactorizationKind::svd) return data_->V * x;
  return (*data_->forward)(x) / std::sqrt(static_cast<double>(data_->N));
}

CVector Factorization::apply_VH(const CVector& z) const {
  require_length(z, data_->N, "apply_VH");
  if (data_->kind == FactorizationKind::svd) return data_->V.adjoint() * z;
  return (*data_->backward)(z) / std::sqrt(static_cast<double>(data_->N));
}

CMatrix Factorization::dense_U() const {
  if (data_->kind == FactorizationKind::svd) return data_->U;
  CMatrix U(data_->M, data_->M);
  for (Index j = 0; j < data_->M; ++j) U.col(j) = apply_U(CVector::Unit(data_->M, j));
  return U;
}

CMatrix Factorization::dense_V() const {
  if (data_->kind == FactorizationKind::svd) return data_->V;
  CMatrix V(data_->N, data_->N);
  for (Index j = 0; j < data_->N; ++j) V.col(j) = apply_V(CVector::Unit(data_->N, j));
  return V;
}

CMatrix Factorization::dense_lambda() const {
  CMatrix L = CMatrix::Zero(data_->M, data_->N);
  for (Index i = 0; i < data_->lambda.size(); ++i) L(i, i) = data_->lambda[i];
  return L;
}

CMatrix Factorization::reconstruct() const { return dense_U() * dense_lambda() * dense_V(); }

Factorization Factorization::from_parts(CMatrix U, CVector lambda, CMatrix V) {
  if (U.rows() != U.cols() || V.rows() != V.cols())
    throw DimensionMismatch("unitary factors must be square");
  if (lambda.size() != std::min(U.rows(), V.rows()))
    throw DimensionMismatch("lambda length must equal min(M, N)");
  auto data = std::make_shared<detail::FactorizationData>();
  data->kind = FactorizationKind::svd;
  data->M = U.rows();
  data->N = V.rows();
  data->lambda = std::move(lambda);
  data->U = std::move(U);
  data->V = std::move(V);
  return Factorization(std::move(data));
}

namespace {

template <typename Svd>
bool take_factors(const Svd& svd, detail::FactorizationData& data) {
  if (svd.info() != Eigen::Success) return false;
  data.U = svd.matrixU().template cast<Complex>();
  data.V = svd.matrixV().adjoint().template cast<Complex>();
  data.lambda = svd.singularValues().template cast<Complex>();
  return data.U.allFinite() && data.V.allFinite() && data.lambda.allFinite();
}

template <typename Mat>
void decompose(const Mat& A, detail::FactorizationData& data) {
  constexpr unsigned options = Eigen::ComputeFullU | Eigen::ComputeFullV;
  if (take_factors(Eigen::BDCSVD<Mat>(A, options), data)) return;
  // Divide and conquer can return NaNs on exactly repeated singular values.
  if (!take_factors(Eigen::JacobiSVD<Mat>(A, options), data))
    throw FactorizationFailed("SVD did not converge");
}

}  // namespace

Factorization svd_factorize(const CMatrix& A) {
  if (A.rows() < 1 || A.cols() < 1) throw InvalidInput("cannot factorize an empty matrix");
  if (!A.allFinite()) throw InvalidInput("cannot factorize a matrix with non-finite entries");

  auto data = std::make_shared<detail::FactorizationData>();
  data->kind = FactorizationKind::svd;
  data->M = A.rows();
  data->N = A.cols();

  if (is_real_valued(A)) {
    const RMatrix Ar = A.real();
    decompose(Ar, *data);
  } else {
    decompose(A, *data);
  }
  if (!data->U.allFinite() || !data->V.allFinite() || !data->lambda.allFinite())
    throw FactorizationFailed("SVD produced non-finite factors");
  return Factorization(std::move(data));
}

Factorization circulant_factorize(const CVector& first_column) {
  const Index n = first_column.size();
  if (n < 1) throw InvalidInput("circulant first column must be non-empty");
  if (!first_column.allFinite()) throw InvalidInput("circulant first column is not finite");

  auto data = std::make_shared<detail::FactorizationData>();
  data->kind = FactorizationKind::dft;
  data->M = n;
  data->N = n;
  data->forward = std::make_shared<const detail::FftPlan>(static_cast<int>(n), FFTW_FORWARD);
  data->backward = std::make_shared<const detail::FftPlan>(static_cast<int>(n), FFTW_BACKWARD);
  data->lambda = (*data->forward)(first_column);
  return Factorization(std::move(data));
}

CMatrix circulant_matrix(const CVector& first_column) {
  const Index n = first_column.size();
  CMatrix C(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) C(i, j) = first_column[((i - j) % n + n) % n];
  return C;
}

std::optional<CVector> circulant_first_column(const CMatrix& A, double tol) {
  if (A.rows() != A.cols() || A.rows() == 0) return std::nullopt;
  const Index n = A.rows();
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1.0);
  const CVector c = A.col(0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (std::abs(A(i, j) - c[((i - j) % n + n) % n]) > tol * scale) return std::nullopt;
  return c;
}

double reconstruction_error(const Factorization& fact, const CMatrix& A) {
  if (fact.rows() != A.rows() || fact.cols() != A.cols())
    throw DimensionMismatch("factorization shape differs from matrix shape");
  const double diff = (fact.reconstruct() - A).norm();
  const double ref = A.norm();
  return ref > 0.0 ? diff / ref : diff;
}

double unitarity_error(const Factorization& fact) {
  const CMatrix U = fact.dense_U();
  const CMatrix V = fact.dense_V();
  const double eu = (U.adjoint() * U - CMatrix::Identity(U.rows(), U.rows())).cwiseAbs().maxCoeff();
  const double ev = (V * V.adjoint() - CMatrix::Identity(V.rows(), V.rows())).cwiseAbs().maxCoeff();
  return std::max(eu, ev);
}

RVector padded_power(const CVector& lambda, Index length) {
  RVector out = RVector::Zero(length);
  const Index k = std::min(length, lambda.size());
  out.head(k) = lambda.head(k).cwiseAbs2();
  return out;
}

CVector TransformedModel::forward(const CVector& x) const {
  const CVector vx = fact.apply_V(x);
  const Index k = lambda().size();
  CVector out = CVector::Zero(rows());
  out.head(k) = lambda().cwiseProduct(vx.head(k));
  return out;
}

CVector TransformedModel::adjoint(const CVector& s) const {
  const Index k = lambda().size();
  CVector z = CVector::Zero(cols());
  z.head(k) = lambda().conjugate().cwiseProduct(s.head(k));
  return fact.apply_VH(z);
}

TransformedModel unitary_transform(const LinearModel& model, const Factorization& fact) {
  if (fact.rows() != model.rows() || fact.cols() != model.cols())
    throw DimensionMismatch("factorization shape differs from model shape");
  TransformedModel t{fact.apply_UH(model.y), fact, model.sigma2, {}, {}};
  t.lambda_p = padded_power(fact.lambda(), model.rows());
  t.lambda_s = padded_power(fact.lambda(), model.cols());
  return t;
}

RVector scaled_gram_diagonal(const CMatrix& C, const RVector& d) {
  if (C.cols() != d.size())
    throw DimensionMismatch("scaled_gram_diagonal: column count differs from weight length");
  return C.cwiseAbs2() * d;
}

}  // namespace utamp

#include "utamp/lmmse.hpp"

#include <cmath>
#include <limits>

namespace utamp {

namespace {

void check(const LinearModel& model, const GaussianPrior& prior) {
  if (prior.size() != model.cols()) throw DimensionMismatch("prior length differs from N");
}

CVector rhs(const LinearModel& model, const GaussianPrior& prior) {
  return model.A.adjoint() * model.y / model.sigma2 +
         prior.x0.cwiseQuotient(prior.tau0.cast<Complex>());
}

}  // namespace

CVector lmmse_estimate(const LinearModel& model, const GaussianPrior& prior) {
  check(model, prior);
  CMatrix H = model.A.adjoint() * model.A / model.sigma2;
  H.diagonal() += prior.tau0.cwiseInverse().cast<Complex>();
  Eigen::LDLT<CMatrix> ldlt(H);
  if (ldlt.info() != Eigen::Success) throw Error("LMMSE normal equations could not be factored");
  return ldlt.solve(rhs(model, prior));
}

double normal_equation_residual(const LinearModel& model, const GaussianPrior& prior,
                                const CVector& x) {
  check(model, prior);
  const CVector b = rhs(model, prior);
  const CVector lhs = model.A.adjoint() * (model.A * x) / model.sigma2 +
                      x.cwiseQuotient(prior.tau0.cast<Complex>());
  const double ref = b.norm();
  return ref > 0.0 ? (lhs - b).norm() / ref : (lhs - b).norm();
}

double nmse_db(const CVector& x_hat, const CVector& x_true) {
  if (x_hat.size() != x_true.size()) throw DimensionMismatch("nmse_db: length mismatch");
  const double ref = x_true.squaredNorm();
  if (ref == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 10.0 * std::log10((x_hat - x_true).squaredNorm() / ref);
}

}  // namespace utamp

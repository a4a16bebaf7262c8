#include "utamp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace utamp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp_floor(double v) { return std::max(v, kVarianceFloor); }

// 1 / inverse with the floor; an exact zero means no information (+inf).
double invert_precision(double inverse) {
  if (inverse <= 0.0) return kInf;
  return clamp_floor(1.0 / inverse);
}

bool finite_state(const SolverState& s) {
  if (!s.x.allFinite() || !s.s_prev.allFinite()) return false;
  if (const auto* v = std::get_if<RVector>(&s.tau_x)) return v->allFinite();
  return std::isfinite(std::get<double>(s.tau_x));
}

// Lines 7-8, shared by the three algorithms. Flags divergence instead of
// handing non-finite values to the denoiser.
template <typename TauQ>
SolverState denoise_step(const SolverState& prev, StepScratch& sc, const TauQ& tau_q,
                         const Prior& prior, Field field, bool vector_variance) {
  SolverState next;
  next.t = prev.t + 1;
  next.s_prev = sc.s;
  if (field == Field::real) sc.q = sc.q.real().cast<Complex>();
  if (!sc.q.allFinite()) {
    next.x = sc.q;
    next.tau_x = kNaN;
    next.diverged = true;
    return next;
  }
  DenoiserOutput out = denoise(prior, sc.q, tau_q, field);
  next.x = std::move(out.mean);
  if (vector_variance) {
    next.tau_x = RVector(out.var_scaled.unaryExpr(&clamp_floor));
  } else {
    next.tau_x = clamp_floor(out.var_scalar);
  }
  next.diverged = !finite_state(next);
  return next;
}

void require_shape(const SolverState& state, Index M, Index N) {
  if (state.x.size() != N || state.s_prev.size() != M)
    throw DimensionMismatch("solver state does not match the model dimensions");
}

}  // namespace

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::amp_vector: return "amp-vec";
    case Algorithm::amp_scalar: return "amp-scalar";
    case Algorithm::ut_amp: return "utamp";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "amp-vec" || name == "amp_vector") return Algorithm::amp_vector;
  if (name == "amp-scalar" || name == "amp_scalar") return Algorithm::amp_scalar;
  if (name == "utamp" || name == "ut_amp" || name == "ut-amp") return Algorithm::ut_amp;
  return std::nullopt;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

double summarize(const Variance& v) {
  if (const auto* vec = std::get_if<RVector>(&v)) return vec->size() > 0 ? vec->mean() : 0.0;
  return std::get<double>(v);
}

AmpSystem::AmpSystem(LinearModel model)
    : model_(std::move(model)),
      abs2_(model_.A.cwiseAbs2()),
      frobenius2_(abs2_.sum()) {}

Field field_of(const LinearModel& model, const Prior& prior) {
  if (!model.is_real()) return Field::complex;
  if (const auto* g = std::get_if<GaussianPrior>(&prior))
    return is_real_valued(g->x0) ? Field::real : Field::complex;
  return std::get<BernoulliGaussianPrior>(prior).mu.imag() == 0.0 ? Field::real : Field::complex;
}

SolverState initial_state(Algorithm algorithm, const Prior& prior, Index M, Index N) {
  SolverState s;
  s.x = prior_mean(prior, N);
  s.s_prev = CVector::Zero(M);
  const RVector var = prior_variance(prior, N).unaryExpr(&clamp_floor);
  if (algorithm == Algorithm::amp_vector) s.tau_x = var;
  else s.tau_x = clamp_floor(var.mean());
  return s;
}

StepResult vector_amp_step(const SolverState& state, const AmpSystem& system, const Prior& prior,
                           Field field) {
  const LinearModel& m = system.model();
  require_shape(state, m.rows(), m.cols());
  const auto* tau_x = std::get_if<RVector>(&state.tau_x);
  if (tau_x == nullptr) throw InvalidInput("vector stepsize AMP needs a vector tau_x");

  StepScratch sc;
  sc.tau_p = system.abs2() * (*tau_x);
  sc.p = m.A * state.x - sc.tau_p.cast<Complex>().cwiseProduct(state.s_prev);
  sc.tau_s = (sc.tau_p.array() + m.sigma2).inverse().matrix();
  sc.s = sc.tau_s.cast<Complex>().cwiseProduct(m.y - sc.p);
  const RVector inv_tau_q = system.abs2().transpose() * sc.tau_s;
  RVector tau_q = inv_tau_q.unaryExpr(&invert_precision);
  const CVector back = m.A.adjoint() * sc.s;
  sc.q = state.x;
  for (Index i = 0; i < sc.q.size(); ++i)
    if (std::isfinite(tau_q[i])) sc.q[i] += tau_q[i] * back[i];
  sc.tau_q = tau_q;

  SolverState next = denoise_step(state, sc, tau_q, prior, field, true);
  return {std::move(next), std::move(sc)};
}

StepResult scalar_amp_step(const SolverState& state, const AmpSystem& system, const Prior& prior,
                           Field field) {
  const LinearModel& m = system.model();
  require_shape(state, m.rows(), m.cols());
  const auto* tau_x = std::get_if<double>(&state.tau_x);
  if (tau_x == nullptr) throw InvalidInput("scalar stepsize AMP needs a scalar tau_x");
  const double M = static_cast<double>(m.rows());
  const double N = static_cast<double>(m.cols());

  StepScratch sc;
  const double tau_p = system.frobenius2() / M * (*tau_x);
  sc.tau_p = RVector::Constant(m.rows(), tau_p);
  sc.p = m.A * state.x - tau_p * state.s_prev;
  const double tau_s = 1.0 / (tau_p + m.sigma2);
  sc.tau_s = RVector::Constant(m.rows(), tau_s);
  sc.s = tau_s * (m.y - sc.p);
  const double tau_q = invert_precision(system.frobenius2() / N * tau_s);
  sc.q = std::isfinite(tau_q) ? CVector(state.x + tau_q * (m.A.adjoint() * sc.s)) : state.x;
  sc.tau_q = tau_q;

  SolverState next = denoise_step(state, sc, tau_q, prior, field, false);
  return {std::move(next), std::move(sc)};
}

StepResult ut_amp_step(const SolverState& state, const TransformedModel& tm, const Prior& prior,
                       Field field) {
  require_shape(state, tm.rows(), tm.cols());
  const auto* tau_x = std::get_if<double>(&state.tau_x);
  if (tau_x == nullptr) throw InvalidInput("UT-AMP needs a scalar tau_x");
  const double N = static_cast<double>(tm.cols());

  StepScratch sc;
  sc.tau_p = *tau_x * tm.lambda_p;
  sc.p = tm.forward(state.x) - sc.tau_p.cast<Complex>().cwiseProduct(state.s_prev);
  sc.tau_s = (sc.tau_p.array() + tm.sigma2).inverse().matrix();
  sc.s = sc.tau_s.cast<Complex>().cwiseProduct(tm.r - sc.p);
  // Only the leading min(M, N) entries of lambda_s and tau_s pair up.
  const Index k = std::min(tm.rows(), tm.cols());
  const double tau_q = invert_precision(tm.lambda_s.head(k).dot(sc.tau_s.head(k)) / N);
  sc.q = std::isfinite(tau_q) ? CVector(state.x + tau_q * tm.adjoint(sc.s)) : state.x;
  sc.tau_q = tau_q;

  SolverState next = denoise_step(state, sc, tau_q, prior, field, false);
  return {std::move(next), std::move(sc)};
}

RunResult run(Algorithm algorithm, const LinearModel& model,
              const std::optional<Factorization>& fact, const Prior& prior,
              const RunOptions& options) {
  if (options.max_iters < 0) throw InvalidInput("max_iters must be non-negative");
  if (!(options.x_tol > 0.0)) throw InvalidInput("x_tol must be positive");
  if (!(options.divergence_norm > 0.0)) throw InvalidInput("divergence_norm must be positive");

  const Index M = model.rows();
  const Index N = model.cols();
  const Field field = field_of(model, prior);

  std::optional<AmpSystem> system;
  std::optional<TransformedModel> tmodel;
  if (algorithm == Algorithm::ut_amp) {
    if (!fact) throw InvalidInput("UT-AMP requires a factorization of A");
    tmodel = unitary_transform(model, *fact);
  } else {
    system.emplace(model);
  }

  auto residual = [&](const CVector& x) {
    if (tmodel) return (tmodel->r - tmodel->forward(x)).norm();
    return (model.y - model.A * x).norm();
  };
  auto mse = [&](const CVector& x) -> std::optional<double> {
    if (!model.x_true) return std::nullopt;
    return (x - *model.x_true).squaredNorm() / static_cast<double>(N);
  };

  RunResult result;
  result.state = options.initial ? *options.initial : initial_state(algorithm, prior, M, N);
  require_shape(result.state, M, N);
  result.trace.records.push_back(TraceRecord{result.state.t, summarize(result.state.tau_x), kNaN,
                                             residual(result.state.x), kNaN,
                                             mse(result.state.x)});
  result.trace.status = RunStatus::max_iters;
  if (!finite_state(result.state)) {
    result.state.diverged = true;
    result.trace.status = RunStatus::diverged;
    return result;
  }

  for (Index it = 0; it < options.max_iters; ++it) {
    StepResult step;
    switch (algorithm) {
      case Algorithm::amp_vector: step = vector_amp_step(result.state, *system, prior, field); break;
      case Algorithm::amp_scalar: step = scalar_amp_step(result.state, *system, prior, field); break;
      case Algorithm::ut_amp: step = ut_amp_step(result.state, *tmodel, prior, field); break;
    }
    SolverState& next = step.state;
    const double x_norm = next.x.norm();
    if (!next.diverged && !(x_norm <= options.divergence_norm)) next.diverged = true;

    const double change = (next.x - result.state.x).norm();
    const double rel_change = x_norm > 0.0 ? change / x_norm : change;
    result.trace.records.push_back(TraceRecord{next.t, summarize(next.tau_x),
                                               summarize(step.scratch.tau_q),
                                               next.diverged ? kNaN : residual(next.x), rel_change,
                                               next.diverged ? std::nullopt : mse(next.x)});
    if (options.on_step) options.on_step(next, step.scratch);
    result.state = std::move(next);
    if (result.state.diverged) {
      result.trace.status = RunStatus::diverged;
      break;
    }
    if (rel_change <= options.x_tol) {
      result.trace.status = RunStatus::converged;
      break;
    }
  }
  return result;
}

}  // namespace utamp

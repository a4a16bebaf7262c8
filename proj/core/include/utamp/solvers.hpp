#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "utamp/denoisers.hpp"
#include "utamp/model_core.hpp"

namespace utamp {

enum class Algorithm { amp_vector, amp_scalar, ut_amp };

/// CLI names: "amp-vec", "amp-scalar", "utamp".
const char* to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// Lower clamp applied to tau_x and tau_q.
inline constexpr double kVarianceFloor = 1e-15;

/// Scalar (scalar-stepsize AMP, UT-AMP) or per-coordinate (vector AMP) variance.
using Variance = std::variant<double, RVector>;

/// Mean of a Variance; the scalar itself when it is one.
double summarize(const Variance& v);

struct SolverState {
  CVector x;
  CVector s_prev;
  Variance tau_x = 1.0;
  Index t = 0;
  bool diverged = false;
};

/// Intermediate quantities of one iteration, before the denoiser.
struct StepScratch {
  RVector tau_p;
  CVector p;
  RVector tau_s;
  CVector s;
  Variance tau_q = 1.0;  // may hold +inf when no coordinate is observed
  CVector q;
};

struct StepResult {
  SolverState state;
  StepScratch scratch;
};

/// A LinearModel with the cached |A|^2 and ||A||_F^2 needed by plain AMP.
class AmpSystem {
public:
  explicit AmpSystem(LinearModel model);

  const LinearModel& model() const { return model_; }
  const RMatrix& abs2() const { return abs2_; }
  double frobenius2() const { return frobenius2_; }

private:
  LinearModel model_;
  RMatrix abs2_;
  double frobenius2_ = 0.0;
};

/// Real when the model and the prior mean carry no imaginary parts.
Field field_of(const LinearModel& model, const Prior& prior);

/// x = prior mean, tau_x = prior variance (averaged unless amp_vector), s = 0.
SolverState initial_state(Algorithm algorithm, const Prior& prior, Index M, Index N);

StepResult vector_amp_step(const SolverState& state, const AmpSystem& system, const Prior& prior,
                           Field field);
StepResult scalar_amp_step(const SolverState& state, const AmpSystem& system, const Prior& prior,
                           Field field);
/// For dft factorizations every V / V^H product is an FFT.
StepResult ut_amp_step(const SolverState& state, const TransformedModel& tmodel,
                       const Prior& prior, Field field);

enum class RunStatus { converged, max_iters, diverged };
const char* to_string(RunStatus status);

struct TraceRecord {
  Index t = 0;
  double tau_x = 0.0;
  double tau_q = 0.0;       // NaN for the initial record
  double residual = 0.0;    // ||y - A x^t||
  double rel_change = 0.0;  // ||x^t - x^{t-1}|| / ||x^t||, NaN for the initial record
  std::optional<double> mse;
};

struct Trace {
  std::vector<TraceRecord> records;  // iterations executed + 1
  RunStatus status = RunStatus::max_iters;
};

struct RunOptions {
  Index max_iters = 1000;
  double x_tol = 1e-10;
  double divergence_norm = 1e12;
  /// Overrides initial_state().
  std::optional<SolverState> initial;
  /// Called after every step with the new state.
  std::function<void(const SolverState&, const StepScratch&)> on_step;
};

struct RunResult {
  SolverState state;
  Trace trace;
};

/// Iterates until the relative x-change drops to x_tol, max_iters steps have
/// run, or the iterate diverges (non-finite or ||x|| > divergence_norm).
/// ut_amp requires a factorization of model.A; the others ignore it.
RunResult run(Algorithm algorithm, const LinearModel& model,
              const std::optional<Factorization>& fact, const Prior& prior,
              const RunOptions& options = {});

}  // namespace utamp

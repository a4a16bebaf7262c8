#include <benchmark/benchmark.h>

#include "utamp/ensembles.hpp"
#include "utamp/solvers.hpp"

using namespace utamp;

namespace {

LinearModel instance(EnsembleKind kind, Index n) {
  EnsembleSpec spec;
  spec.kind = kind;
  spec.M = n;
  spec.N = n;
  spec.seed = 1;
  if (kind == EnsembleKind::circulant) spec.taps = CVector::LinSpaced(8, 1.0, 0.1);
  const CMatrix A = generate_matrix(spec);
  return synthesize_instance(A, make_gaussian_prior(n, 0.0, 1.0), 1e-2, 2);
}

void BM_VectorAmpStep(benchmark::State& state) {
  const LinearModel m = instance(EnsembleKind::iid_gaussian, state.range(0));
  const Prior prior = make_gaussian_prior(m.cols(), 0.0, 1.0);
  const AmpSystem system(m);
  const SolverState s = initial_state(Algorithm::amp_vector, prior, m.rows(), m.cols());
  for (auto _ : state) benchmark::DoNotOptimize(vector_amp_step(s, system, prior, Field::real));
}

void BM_ScalarAmpStep(benchmark::State& state) {
  const LinearModel m = instance(EnsembleKind::iid_gaussian, state.range(0));
  const Prior prior = make_gaussian_prior(m.cols(), 0.0, 1.0);
  const AmpSystem system(m);
  const SolverState s = initial_state(Algorithm::amp_scalar, prior, m.rows(), m.cols());
  for (auto _ : state) benchmark::DoNotOptimize(scalar_amp_step(s, system, prior, Field::real));
}

void BM_UtAmpStepSvd(benchmark::State& state) {
  const LinearModel m = instance(EnsembleKind::iid_gaussian, state.range(0));
  const Prior prior = make_gaussian_prior(m.cols(), 0.0, 1.0);
  const TransformedModel tm = unitary_transform(m, svd_factorize(m.A));
  const SolverState s = initial_state(Algorithm::ut_amp, prior, m.rows(), m.cols());
  for (auto _ : state) benchmark::DoNotOptimize(ut_amp_step(s, tm, prior, Field::real));
}

void BM_UtAmpStepDft(benchmark::State& state) {
  const LinearModel m = instance(EnsembleKind::circulant, state.range(0));
  const Prior prior = make_gaussian_prior(m.cols(), 0.0, 1.0);
  const TransformedModel tm = unitary_transform(m, circulant_factorize(m.A.col(0)));
  const SolverState s = initial_state(Algorithm::ut_amp, prior, m.rows(), m.cols());
  for (auto _ : state) benchmark::DoNotOptimize(ut_amp_step(s, tm, prior, Field::real));
}

void BM_SvdFactorize(benchmark::State& state) {
  const LinearModel m = instance(EnsembleKind::iid_gaussian, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(svd_factorize(m.A));
}

}  // namespace

BENCHMARK(BM_VectorAmpStep)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_ScalarAmpStep)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_UtAmpStepSvd)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_UtAmpStepDft)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_SvdFactorize)->RangeMultiplier(4)->Range(64, 256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

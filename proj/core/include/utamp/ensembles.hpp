#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "utamp/denoisers.hpp"
#include "utamp/model_core.hpp"

namespace utamp {

enum class EnsembleKind {
  iid_gaussian,
  nonzero_mean,
  ill_conditioned,
  rank_deficient,
  column_correlated,
  circulant,
};

const char* to_string(EnsembleKind kind);
std::optional<EnsembleKind> parse_ensemble_kind(std::string_view name);

/// Seeded description of a test matrix. Unset knobs take per-kind defaults:
/// mean_shift 10, kappa 1e6 (ill_conditioned) or 1 (rank_deficient),
/// rank floor(min(M, N) / 2), correlation 0.9.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::iid_gaussian;
  Index M = 0;
  Index N = 0;
  std::optional<double> mean_shift;
  std::optional<double> kappa;
  std::optional<Index> rank;
  std::optional<double> correlation;
  CVector taps;  // circulant only; zero-padded to N
  std::uint64_t seed = 0;
};

/// Throws InvalidInput on out-of-range knobs. For circulant specs with M = N
/// = 0 the size is taken from the taps.
EnsembleSpec validate(EnsembleSpec spec);

/// Parses "key=value" tokens: kind, M, N, mean_shift (mu_A), kappa, rank (r),
/// correlation (rho_c), taps (comma separated, "re:im" for complex), seed.
EnsembleSpec parse_ensemble_spec(const std::vector<std::string>& tokens);

/// Deterministic in spec (including seed).
///   iid_gaussian       entries N(0, 1/M)
///   nonzero_mean       iid_gaussian + mean_shift
///   ill_conditioned    U0 Diag(s) V0^T, s log-spaced from 1 down to 1/kappa
///   rank_deficient     as ill_conditioned with trailing singular values zeroed
///   column_correlated  G R^{1/2} with R_ij = correlation^|i-j|
///   circulant          circulant matrix whose first column is the taps
CMatrix generate_matrix(const EnsembleSpec& spec);

/// Draws x_true from the prior and n ~ N(0, sigma2 I) (circular complex when A
/// is complex), and returns y = A x_true + n. Deterministic in seed.
LinearModel synthesize_instance(const CMatrix& A, const Prior& prior, double sigma2,
                                std::uint64_t seed);

/// Haar-distributed orthogonal (real) or unitary (complex) n x n matrix.
CMatrix random_unitary(Index n, std::uint64_t seed, bool complex_valued = false);

/// sigma_max / sigma_min (inf when rank deficient) and the count of singular
/// values above rel_tol * sigma_max.
struct SpectrumSummary {
  double condition_number = 0.0;
  Index rank = 0;
  RVector singular_values;
};
SpectrumSummary summarize_spectrum(const CMatrix& A, double rel_tol = 1e-10);

}  // namespace utamp

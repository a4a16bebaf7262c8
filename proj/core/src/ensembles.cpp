#include "utamp/ensembles.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace utamp {

namespace {

// splitmix64 finalizer; derives independent stream seeds from one user seed.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t { matrix = 1, signal = 2, noise = 3, unitary = 4 };

std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  return mix(seed ^ mix(static_cast<std::uint64_t>(s)));
}

// mt19937_64 with a fixed Box-Muller transform; std::normal_distribution is
// implementation-defined, this is not.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Unit-variance draw: N(0, 1) or circular CN(0, 1).
  Complex unit(bool complex_valued) {
    if (!complex_valued) return {normal(), 0.0};
    const double re = normal();
    const double im = normal();
    return Complex(re, im) * std::numbers::sqrt2 * 0.5;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

RMatrix gaussian_matrix(Index rows, Index cols, double stddev, Rng& rng) {
  RMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = stddev * rng.normal();
  return m;
}

RMatrix haar_orthogonal(Index n, Rng& rng) {
  const RMatrix G = gaussian_matrix(n, n, 1.0, rng);
  Eigen::HouseholderQR<RMatrix> qr(G);
  RMatrix Q = qr.householderQ() * RMatrix::Identity(n, n);
  const RMatrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

RVector log_spaced(Index count, double kappa) {
  RVector s(count);
  for (Index i = 0; i < count; ++i) {
    const double frac = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    s[i] = std::pow(kappa, -frac);
  }
  return s;
}

CMatrix from_spectrum(Index M, Index N, const RVector& sv, Rng& rng) {
  const RMatrix U0 = haar_orthogonal(M, rng);
  const RMatrix V0 = haar_orthogonal(N, rng);
  const Index k = sv.size();
  const RMatrix A = U0.leftCols(k) * sv.asDiagonal() * V0.leftCols(k).transpose();
  return A.cast<Complex>();
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ParseError("ensemble field " + key + " has an invalid value '" + value + "'");
  return v;
}

CVector parse_taps(const std::string& text) {
  std::string body = text;
  if (!body.empty() && body.front() == '[') body.erase(0, 1);
  if (!body.empty() && body.back() == ']') body.pop_back();
  std::vector<Complex> values;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      values.emplace_back(parse_number<double>("taps", item), 0.0);
    } else {
      values.emplace_back(parse_number<double>("taps", item.substr(0, colon)),
                          parse_number<double>("taps", item.substr(colon + 1)));
    }
  }
  if (values.empty()) throw ParseError("taps must list at least one value");
  CVector taps(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) taps[static_cast<Index>(i)] = values[i];
  return taps;
}

}  // namespace

const char* to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::iid_gaussian: return "iid_gaussian";
    case EnsembleKind::nonzero_mean: return "nonzero_mean";
    case EnsembleKind::ill_conditioned: return "ill_conditioned";
    case EnsembleKind::rank_deficient: return "rank_deficient";
    case EnsembleKind::column_correlated: return "column_correlated";
    case EnsembleKind::circulant: return "circulant";
  }
  return "?";
}

std::optional<EnsembleKind> parse_ensemble_kind(std::string_view name) {
  for (auto k : {EnsembleKind::iid_gaussian, EnsembleKind::nonzero_mean,
                 EnsembleKind::ill_conditioned, EnsembleKind::rank_deficient,
                 EnsembleKind::column_correlated, EnsembleKind::circulant})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

EnsembleSpec validate(EnsembleSpec spec) {
  if (spec.kind == EnsembleKind::circulant) {
    if (spec.taps.size() == 0) throw InvalidInput("circulant ensemble needs taps");
    if (spec.M == 0 && spec.N == 0) spec.M = spec.N = spec.taps.size();
    else if (spec.M == 0) spec.M = spec.N;
    else if (spec.N == 0) spec.N = spec.M;
    if (spec.M != spec.N) throw InvalidInput("circulant ensemble requires M = N");
    if (spec.taps.size() > spec.N) throw InvalidInput("more taps than the matrix size");
    if (!spec.taps.allFinite()) throw InvalidInput("taps must be finite");
    return spec;
  }
  if (spec.M < 1 || spec.N < 1) throw InvalidInput("ensemble dimensions must be positive");
  const Index k = std::min(spec.M, spec.N);
  if (spec.kappa && !(*spec.kappa >= 1.0 && std::isfinite(*spec.kappa)))
    throw InvalidInput("condition number kappa must be >= 1");
  if (spec.rank && (*spec.rank < 1 || *spec.rank > k))
    throw InvalidInput("rank must lie in [1, min(M, N)]");
  if (spec.correlation && !(*spec.correlation >= 0.0 && *spec.correlation < 1.0))
    throw InvalidInput("column correlation must lie in [0, 1)");
  if (spec.mean_shift && !std::isfinite(*spec.mean_shift))
    throw InvalidInput("mean shift must be finite");
  return spec;
}

EnsembleSpec parse_ensemble_spec(const std::vector<std::string>& tokens) {
  EnsembleSpec spec;
  bool have_kind = false;
  for (const std::string& token : tokens) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ParseError("ensemble field must be key=value: " + token);
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "kind") {
      auto k = parse_ensemble_kind(value);
      if (!k) throw ParseError("unknown ensemble kind '" + value + "'");
      spec.kind = *k;
      have_kind = true;
    } else if (key == "M") {
      spec.M = parse_number<Index>(key, value);
    } else if (key == "N") {
      spec.N = parse_number<Index>(key, value);
    } else if (key == "mean_shift" || key == "mu_A" || key == "mu") {
      spec.mean_shift = parse_number<double>(key, value);
    } else if (key == "kappa") {
      spec.kappa = parse_number<double>(key, value);
    } else if (key == "rank" || key == "r") {
      spec.rank = parse_number<Index>(key, value);
    } else if (key == "correlation" || key == "rho_c") {
      spec.correlation = parse_number<double>(key, value);
    } else if (key == "taps") {
      spec.taps = parse_taps(value);
    } else if (key == "seed") {
      spec.seed = parse_number<std::uint64_t>(key, value);
    } else {
      throw ParseError("unknown ensemble field '" + key + "'");
    }
  }
  if (!have_kind) throw ParseError("ensemble spec needs kind=<family>");
  return validate(std::move(spec));
}

CMatrix generate_matrix(const EnsembleSpec& raw) {
  const EnsembleSpec spec = validate(raw);
  const Index M = spec.M;
  const Index N = spec.N;
  const Index k = std::min(M, N);
  Rng rng(stream_seed(spec.seed, Stream::matrix));
  const double entry_std = 1.0 / std::sqrt(static_cast<double>(M));

  switch (spec.kind) {
    case EnsembleKind::iid_gaussian:
      return gaussian_matrix(M, N, entry_std, rng).cast<Complex>();
    case EnsembleKind::nonzero_mean: {
      const RMatrix G = gaussian_matrix(M, N, entry_std, rng);
      return (G.array() + spec.mean_shift.value_or(10.0)).matrix().cast<Complex>();
    }
    case EnsembleKind::ill_conditioned:
      return from_spectrum(M, N, log_spaced(k, spec.kappa.value_or(1e6)), rng);
    case EnsembleKind::rank_deficient: {
      const Index r = spec.rank.value_or(std::max<Index>(1, k / 2));
      RVector sv = RVector::Zero(k);
      sv.head(r) = log_spaced(r, spec.kappa.value_or(1.0));
      return from_spectrum(M, N, sv, rng);
    }
    case EnsembleKind::column_correlated: {
      const double rho = spec.correlation.value_or(0.9);
      RMatrix R(N, N);
      for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < N; ++j) R(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
      Eigen::SelfAdjointEigenSolver<RMatrix> eig(R);
      const RMatrix root = eig.operatorSqrt();
      const RMatrix G = gaussian_matrix(M, N, entry_std, rng);
      return (G * root).cast<Complex>();
    }
    case EnsembleKind::circulant: {
      CVector column = CVector::Zero(N);
      column.head(spec.taps.size()) = spec.taps;
      return circulant_matrix(column);
    }
  }
  throw InvalidInput("unknown ensemble kind");
}

LinearModel synthesize_instance(const CMatrix& A, const Prior& prior, double sigma2,
                                std::uint64_t seed) {
  if (!(sigma2 > 0.0)) throw InvalidInput("sigma2 must be positive");
  const Index M = A.rows();
  const Index N = A.cols();

  bool complex_valued = !is_real_valued(A);
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    if (g->size() != N) throw DimensionMismatch("prior length differs from N");
    complex_valued = complex_valued || !is_real_valued(g->x0);
  } else {
    complex_valued = complex_valued || std::get<BernoulliGaussianPrior>(prior).mu.imag() != 0.0;
  }

  Rng signal(stream_seed(seed, Stream::signal));
  CVector x(N);
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    for (Index i = 0; i < N; ++i) x[i] = g->x0[i] + std::sqrt(g->tau0[i]) * signal.unit(complex_valued);
  } else {
    const auto& b = std::get<BernoulliGaussianPrior>(prior);
    for (Index i = 0; i < N; ++i) {
      const bool active = signal.uniform() < b.rho;
      const Complex slab = b.mu + std::sqrt(b.v) * signal.unit(complex_valued);
      x[i] = active ? slab : Complex(0.0, 0.0);
    }
  }

  Rng noise_rng(stream_seed(seed, Stream::noise));
  CVector noise(M);
  const double noise_std = std::sqrt(sigma2);
  for (Index i = 0; i < M; ++i) noise[i] = noise_std * noise_rng.unit(complex_valued);

  CVector y = A * x + noise;
  return make_linear_model(A, std::move(y), sigma2, std::move(x));
}

CMatrix random_unitary(Index n, std::uint64_t seed, bool complex_valued) {
  if (n < 1) throw InvalidInput("unitary size must be positive");
  Rng rng(stream_seed(seed, Stream::unitary));
  if (!complex_valued) return haar_orthogonal(n, rng).cast<Complex>();
  CMatrix G(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) G(i, j) = rng.unit(true);
  Eigen::HouseholderQR<CMatrix> qr(G);
  CMatrix Q = qr.householderQ() * CMatrix::Identity(n, n);
  for (Index j = 0; j < n; ++j) {
    const Complex r = qr.matrixQR()(j, j);
    if (std::abs(r) > 0.0) Q.col(j) *= r / std::abs(r);
  }
  return Q;
}

SpectrumSummary summarize_spectrum(const CMatrix& A, double rel_tol) {
  SpectrumSummary s;
  if (is_real_valued(A)) {
    s.singular_values = Eigen::BDCSVD<RMatrix>(A.real()).singularValues();
  } else {
    s.singular_values = Eigen::BDCSVD<CMatrix>(A).singularValues();
  }
  const double top = s.singular_values.size() > 0 ? s.singular_values[0] : 0.0;
  for (Index i = 0; i < s.singular_values.size(); ++i)
    if (s.singular_values[i] > rel_tol * top) ++s.rank;
  const double bottom = s.singular_values.size() > 0 ? s.singular_values.tail(1)[0] : 0.0;
  s.condition_number =
      bottom > rel_tol * top ? top / bottom : std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace utamp

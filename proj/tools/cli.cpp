#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "utamp/ensembles.hpp"
#include "utamp/lmmse.hpp"
#include "utamp/matrix_io.hpp"
#include "utamp/prior_spec.hpp"
#include "utamp/solvers.hpp"
#include "utamp/spectral.hpp"
#include "utamp/trace_io.hpp"

namespace fs = std::filesystem;

namespace utamp::cli {

namespace {

// Options shared by solve, certify and compare.
struct InstanceOptions {
  std::vector<std::string> ensemble;  // key=value tokens
  std::string matrix_path;
  std::string y_path;
  std::string x_true_path;
  bool circulant = false;
  std::string prior = "gaussian(x0=0,tau0=1)";
  double sigma2 = 1e-2;
  std::uint64_t seed = 0;
};

struct RunFlags {
  std::vector<std::string> algorithms;
  std::string factorization = "auto";
  Index max_iters = 1000;
  double x_tol = 1e-10;
  std::string out_dir = ".";
};

struct Instance {
  LinearModel model;
  Prior prior;
  std::optional<CVector> circulant_column;  // set when declared circulant
  std::string source;
};

// A requested run: algorithm plus the factorization UT-AMP should use.
struct RunRequest {
  Algorithm algorithm;
  std::optional<FactorizationKind> factorization;
  std::string label;
};

struct RunOutcome {
  RunRequest request;
  RunResult result;
  std::optional<double> nmse;
  std::optional<double> lmmse_gap;
  fs::path trace_path;
};

class UsageError : public Error {
public:
  using Error::Error;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// Accepts "iid_gaussian 8 8 seed=1" shorthand next to explicit key=value.
EnsembleSpec ensemble_from_tokens(const std::vector<std::string>& tokens,
                                  std::optional<std::uint64_t> default_seed) {
  std::vector<std::string> normalized;
  int bare = 0;
  bool has_seed = false;
  for (const std::string& t : tokens) {
    if (t.find('=') != std::string::npos) {
      if (t.rfind("seed=", 0) == 0) has_seed = true;
      normalized.push_back(t);
      continue;
    }
    static const char* kOrder[] = {"kind", "M", "N"};
    if (bare >= 3) throw UsageError("unexpected ensemble token '" + t + "'");
    normalized.push_back(std::string(kOrder[bare++]) + "=" + t);
  }
  if (!has_seed && default_seed) normalized.push_back("seed=" + std::to_string(*default_seed));
  return parse_ensemble_spec(normalized);
}

void add_instance_options(CLI::App& cmd, InstanceOptions& o) {
  cmd.add_option("ensemble", o.ensemble,
                 "Ensemble as key=value tokens, e.g. kind=ill_conditioned M=64 N=64 kappa=1e6");
  cmd.add_option("--matrix", o.matrix_path, "Matrix file (text format) instead of an ensemble");
  cmd.add_option("--y", o.y_path, "Observation vector file; synthesized from the prior when absent");
  cmd.add_option("--x-true", o.x_true_path, "Ground-truth vector file (used with --y)");
  cmd.add_flag("--circulant", o.circulant, "Declare the --matrix input circulant");
  cmd.add_option("--prior", o.prior, "gaussian(x0=..,tau0=..) or bg(rho=..,mu=..,v=..)")
      ->capture_default_str();
  cmd.add_option("--sigma2", o.sigma2, "Noise variance")->capture_default_str();
  cmd.add_option("--seed", o.seed, "Seed for the instance (and ensemble unless seed= given)")
      ->capture_default_str();
}

void add_run_flags(CLI::App& cmd, RunFlags& f, bool with_algorithms) {
  if (with_algorithms)
    cmd.add_option("--algo", f.algorithms, "amp-vec, amp-scalar, utamp, utamp-svd, utamp-dft");
  cmd.add_option("--factorization", f.factorization, "svd, dft or auto")
      ->check(CLI::IsMember({"svd", "dft", "auto"}))
      ->capture_default_str();
  cmd.add_option("--max-iters", f.max_iters, "Iteration cap")->capture_default_str();
  cmd.add_option("--x-tol", f.x_tol, "Relative x-change tolerance")->capture_default_str();
  cmd.add_option("--out", f.out_dir, "Output directory")->capture_default_str();
}

Instance load_instance(const InstanceOptions& o) {
  if (!o.matrix_path.empty() && !o.ensemble.empty())
    throw UsageError("give either --matrix or ensemble tokens, not both");
  if (o.matrix_path.empty() && o.ensemble.empty())
    throw UsageError("no input: give --matrix FILE or ensemble tokens (kind=... M=... N=...)");
  if (!(o.sigma2 > 0.0)) throw UsageError("--sigma2 must be positive");

  CMatrix A;
  std::optional<CVector> column;
  std::string source;
  if (!o.matrix_path.empty()) {
    A = read_matrix(fs::path(o.matrix_path));
    source = o.matrix_path;
    if (o.circulant) {
      column = circulant_first_column(A);
      if (!column) throw UsageError(o.matrix_path + " is declared circulant but is not");
    }
  } else {
    const EnsembleSpec spec = ensemble_from_tokens(o.ensemble, o.seed);
    A = generate_matrix(spec);
    source = std::string("ensemble ") + to_string(spec.kind);
    if (spec.kind == EnsembleKind::circulant) column = A.col(0);
  }

  Prior prior = parse_prior(o.prior, A.cols());
  if (!o.y_path.empty()) {
    std::optional<CVector> x_true;
    if (!o.x_true_path.empty()) x_true = read_vector(o.x_true_path);
    LinearModel model = make_linear_model(A, read_vector(o.y_path), o.sigma2, std::move(x_true));
    return {std::move(model), std::move(prior), std::move(column), source};
  }
  if (!o.x_true_path.empty()) throw UsageError("--x-true requires --y");
  LinearModel model = synthesize_instance(A, prior, o.sigma2, o.seed);
  return {std::move(model), std::move(prior), std::move(column), source};
}

FactorizationKind choose_factorization(const std::string& flag, const Instance& inst) {
  if (flag == "svd") return FactorizationKind::svd;
  if (flag == "dft") {
    if (!inst.circulant_column)
      throw UsageError("dft factorization needs a circulant input (kind=circulant or --circulant)");
    return FactorizationKind::dft;
  }
  return inst.circulant_column ? FactorizationKind::dft : FactorizationKind::svd;
}

std::vector<RunRequest> parse_requests(const std::vector<std::string>& names,
                                       const std::string& factorization_flag,
                                       const Instance& inst) {
  std::vector<RunRequest> requests;
  for (const std::string& name : names) {
    if (name == "utamp-svd" || name == "utamp-dft") {
      const FactorizationKind kind =
          choose_factorization(name == "utamp-svd" ? "svd" : "dft", inst);
      requests.push_back({Algorithm::ut_amp, kind, name});
      continue;
    }
    const auto algorithm = parse_algorithm(name);
    if (!algorithm) throw UsageError("unknown algorithm '" + name + "'");
    std::optional<FactorizationKind> kind;
    if (*algorithm == Algorithm::ut_amp) kind = choose_factorization(factorization_flag, inst);
    requests.push_back({*algorithm, kind, to_string(*algorithm)});
  }
  if (requests.empty()) throw UsageError("no algorithm selected");
  return requests;
}

Factorization factorize(FactorizationKind kind, const Instance& inst) {
  if (kind == FactorizationKind::dft) return circulant_factorize(*inst.circulant_column);
  return svd_factorize(inst.model.A);
}

RunOutcome execute(const RunRequest& request, const Instance& inst, const RunFlags& flags,
                   const std::optional<CVector>& lmmse) {
  std::optional<Factorization> fact;
  if (request.factorization) fact = factorize(*request.factorization, inst);
  RunOptions options;
  options.max_iters = flags.max_iters;
  options.x_tol = flags.x_tol;

  RunOutcome outcome{request, run(request.algorithm, inst.model, fact, inst.prior, options), {}, {}, {}};
  const CVector& x = outcome.result.state.x;
  if (inst.model.x_true && x.allFinite()) outcome.nmse = nmse_db(x, *inst.model.x_true);
  if (lmmse && x.allFinite()) {
    const double ref = lmmse->norm();
    outcome.lmmse_gap = ref > 0.0 ? (x - *lmmse).norm() / ref : (x - *lmmse).norm();
  }
  return outcome;
}

void write_trace(RunOutcome& outcome, const RunFlags& flags, const std::string& command) {
  outcome.trace_path = fs::path(flags.out_dir) / ("trace_" + outcome.request.label + ".csv");
  write_trace_csv(outcome.trace_path, outcome.result.trace,
                  "utamp " + command + " " + outcome.request.label + " generated " + timestamp());
}

std::string summary_line(const RunOutcome& o) {
  std::ostringstream os;
  os << "algo=" << o.request.label;
  if (o.request.factorization) os << " factorization=" << to_string(*o.request.factorization);
  os << " status=" << to_string(o.result.trace.status)
     << " iters=" << o.result.trace.records.size() - 1
     << " nmse_db=" << (o.nmse ? fmt(*o.nmse) : "n/a")
     << " lmmse_gap=" << (o.lmmse_gap ? fmt(*o.lmmse_gap) : "n/a");
  return os.str();
}

std::optional<CVector> lmmse_reference(const Instance& inst) {
  if (const auto* g = std::get_if<GaussianPrior>(&inst.prior)) return lmmse_estimate(inst.model, *g);
  return std::nullopt;
}

std::vector<RunOutcome> run_all(const std::vector<RunRequest>& requests, const Instance& inst,
                                const RunFlags& flags) {
  const std::optional<CVector> lmmse = lmmse_reference(inst);
  std::vector<std::future<RunOutcome>> futures;
  futures.reserve(requests.size());
  for (const RunRequest& r : requests)
    futures.push_back(std::async(std::launch::async,
                                 [&, r] { return execute(r, inst, flags, lmmse); }));
  std::vector<RunOutcome> outcomes;
  for (auto& f : futures) outcomes.push_back(f.get());
  return outcomes;
}

int exit_code_for(const std::vector<RunOutcome>& outcomes) {
  for (const RunOutcome& o : outcomes)
    if (o.result.trace.status != RunStatus::diverged) return kExitOk;
  return kExitAllDiverged;
}

void ensure_out_dir(const RunFlags& flags) {
  std::error_code ec;
  fs::create_directories(flags.out_dir, ec);
  if (ec) throw Error("cannot create output directory " + flags.out_dir + ": " + ec.message());
}

void log_factorization_choice(std::ostream& out, const RunFlags& flags,
                              const std::vector<RunRequest>& requests) {
  for (const RunRequest& r : requests) {
    if (!r.factorization || r.label != "utamp") continue;
    out << "factorization: " << to_string(*r.factorization);
    if (flags.factorization == "auto")
      out << (*r.factorization == FactorizationKind::dft ? " (auto: circulant input)"
                                                         : " (auto: general input)");
    out << '\n';
  }
}

int cmd_gen(const std::vector<std::string>& tokens, std::optional<std::uint64_t> seed,
            const std::string& out_path, std::ostream& out) {
  const EnsembleSpec spec = ensemble_from_tokens(tokens, seed);
  const CMatrix A = generate_matrix(spec);
  write_matrix(fs::path(out_path), A);
  const SpectrumSummary s = summarize_spectrum(A);
  out << "wrote " << out_path << ": " << A.rows() << "x" << A.cols() << " " << to_string(spec.kind)
      << " seed=" << spec.seed << '\n';
  out << "condition_number: " << fmt(s.condition_number) << '\n';
  out << "rank: " << s.rank << '\n';
  return kExitOk;
}

int cmd_solve(const InstanceOptions& io, RunFlags flags, std::ostream& out) {
  const Instance inst = load_instance(io);
  if (flags.algorithms.empty()) flags.algorithms = {"utamp"};
  const auto requests = parse_requests(flags.algorithms, flags.factorization, inst);
  ensure_out_dir(flags);
  log_factorization_choice(out, flags, requests);
  auto outcomes = run_all(requests, inst, flags);
  for (RunOutcome& o : outcomes) {
    write_trace(o, flags, "solve");
    out << summary_line(o) << '\n';
  }
  return exit_code_for(outcomes);
}

int cmd_certify(const InstanceOptions& io, const RunFlags& flags, bool check_numeric,
                std::ostream& out) {
  const Instance inst = load_instance(io);
  const FactorizationKind kind = choose_factorization(flags.factorization, inst);
  CertifyOptions options;
  options.check_numeric = check_numeric;
  const ConvergenceCertificate cert =
      certify(factorize(kind, inst), inst.prior, inst.model.sigma2, options);
  out << "source: " << inst.source << '\n';
  out << "factorization: " << to_string(kind) << '\n';
  write_certificate(out, cert);
  return kExitOk;
}

int cmd_compare(const InstanceOptions& io, RunFlags flags, std::ostream& out) {
  const Instance inst = load_instance(io);
  if (flags.algorithms.empty()) flags.algorithms = {"amp-vec", "amp-scalar", "utamp"};
  const auto requests = parse_requests(flags.algorithms, flags.factorization, inst);
  if (requests.size() < 2) throw UsageError("compare needs at least two algorithms");
  ensure_out_dir(flags);
  log_factorization_choice(out, flags, requests);
  auto outcomes = run_all(requests, inst, flags);

  out << "instance: " << inst.source << " M=" << inst.model.rows() << " N=" << inst.model.cols()
      << " sigma2=" << fmt(inst.model.sigma2) << " prior=" << describe_prior(inst.prior) << '\n';
  out << std::left << std::setw(12) << "algorithm" << std::setw(14) << "factorization"
      << std::setw(11) << "status" << std::setw(7) << "iters" << std::setw(13) << "nmse_db"
      << std::setw(13) << "residual" << "lmmse_gap" << '\n';

  const fs::path csv_path = fs::path(flags.out_dir) / "compare.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path.string());
  csv << "# utamp compare generated " << timestamp() << '\n';
  csv << "algorithm,factorization,status,iterations,nmse_db,residual,lmmse_gap\n";

  for (RunOutcome& o : outcomes) {
    write_trace(o, flags, "compare");
    const auto& rec = o.result.trace.records.back();
    const std::string fact = o.request.factorization ? to_string(*o.request.factorization) : "-";
    out << std::left << std::setw(12) << o.request.label << std::setw(14) << fact << std::setw(11)
        << to_string(o.result.trace.status) << std::setw(7) << o.result.trace.records.size() - 1
        << std::setw(13) << (o.nmse ? fmt(*o.nmse) : "n/a") << std::setw(13) << fmt(rec.residual)
        << (o.lmmse_gap ? fmt(*o.lmmse_gap) : "n/a") << '\n';
    csv << o.request.label << ',' << fact << ',' << to_string(o.result.trace.status) << ','
        << o.result.trace.records.size() - 1 << ',' << (o.nmse ? format_double(*o.nmse) : "")
        << ',' << (std::isfinite(rec.residual) ? format_double(rec.residual) : "") << ','
        << (o.lmmse_gap ? format_double(*o.lmmse_gap) : "") << '\n';
  }

  bool has_utamp = false;
  for (const RunRequest& r : requests) has_utamp = has_utamp || r.algorithm == Algorithm::ut_amp;
  if (has_utamp) {
    if (std::holds_alternative<GaussianPrior>(inst.prior)) {
      const FactorizationKind kind = choose_factorization(flags.factorization, inst);
      const ConvergenceCertificate cert = certify(factorize(kind, inst), inst.prior, inst.model.sigma2);
      out << "certificate: tau_x=" << fmt(cert.fixed_point->tau_x)
          << " alpha=" << fmt(cert.coefficients.alpha)
          << " spectral_radius=" << fmt(cert.spectral_radius)
          << " converges=" << (cert.converges ? "true" : "false") << '\n';
      std::ofstream cert_file(fs::path(flags.out_dir) / "certificate.txt");
      write_certificate(cert_file, cert);
    } else {
      out << "certificate: n/a (prior is not Gaussian)\n";
    }
  }
  return exit_code_for(outcomes);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"UT-AMP and AMP solvers, matrix ensembles and convergence certificates", "utamp"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);

  std::vector<std::string> gen_tokens;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Generate an ensemble matrix file");
  gen->add_option("ensemble", gen_tokens, "kind=... M=... N=... (or: kind M N)")->required();
  gen->add_option("--seed", gen_seed, "Seed unless the tokens give seed=");
  gen->add_option("--out", gen_out, "Output matrix file")->required();

  InstanceOptions solve_io;
  RunFlags solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "Run solvers and write CSV traces");
  add_instance_options(*solve, solve_io);
  add_run_flags(*solve, solve_flags, true);

  InstanceOptions cert_io;
  RunFlags cert_flags;
  bool check_numeric = false;
  CLI::App* cert = app.add_subcommand("certify", "Certify UT-AMP convergence (Gaussian prior)");
  add_instance_options(*cert, cert_io);
  cert->add_option("--factorization", cert_flags.factorization, "svd, dft or auto")
      ->check(CLI::IsMember({"svd", "dft", "auto"}));
  cert->add_flag("--check-numeric", check_numeric,
                 "Compare closed-form eigenvalues with a dense eigensolver");

  InstanceOptions cmp_io;
  RunFlags cmp_flags;
  CLI::App* compare = app.add_subcommand("compare", "Run several algorithms on one instance");
  add_instance_options(*compare, cmp_io);
  add_run_flags(*compare, cmp_flags, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_tokens, gen_seed, gen_out, out);
    if (*solve) return cmd_solve(solve_io, solve_flags, out);
    if (*cert) return cmd_certify(cert_io, cert_flags, check_numeric, out);
    if (*compare) return cmd_compare(cmp_io, cmp_flags, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace utamp::cli

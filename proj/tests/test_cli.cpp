#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "utamp/matrix_io.hpp"
#include "utamp/model_core.hpp"

namespace fs = std::filesystem;
using namespace utamp;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = utamp::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(UTAMP_TEST_TMPDIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string drop_comments(const std::string& text) {
  std::string out;
  for (const std::string& l : lines(text))
    if (l.empty() || l[0] != '#') out += l + "\n";
  return out;
}

// Column `name` of a trace CSV (comment line skipped).
std::vector<double> column(const fs::path& csv, const std::string& name) {
  const auto rows = lines(drop_comments(slurp(csv)));
  std::vector<std::string> header;
  std::stringstream hs(rows.at(0));
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  const auto idx = std::size_t(std::find(header.begin(), header.end(), name) - header.begin());
  std::vector<double> values;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::stringstream rs(rows[r]);
    std::string cell;
    for (std::size_t c = 0; c <= idx; ++c) std::getline(rs, cell, ',');
    values.push_back(cell.empty() ? std::nan("") : std::stod(cell));
  }
  return values;
}

}  // namespace

TEST(CliGen, WritesEnsembleFileWithHeader) {
  const fs::path dir = scratch("gen_iid");
  const Result r = invoke({"gen", "iid_gaussian", "8", "8", "seed=1", "--out", (dir / "a.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp(dir / "a.txt")).at(0), "8 8 real");
  EXPECT_EQ(lines(slurp(dir / "a.txt")).size(), 9u);
  EXPECT_NE(r.out.find("rank: 8"), std::string::npos);
}

TEST(CliGen, CirculantTapsRoundTripThroughFactorization) {
  const fs::path dir = scratch("gen_circ");
  const Result r = invoke({"gen", "kind=circulant", "taps=2,1,0,1", "--out", (dir / "c.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const CMatrix A = read_matrix(dir / "c.txt");
  ASSERT_EQ(A.rows(), 4);
  const auto column = circulant_first_column(A);
  ASSERT_TRUE(column.has_value());
  const CVector lambda = circulant_factorize(*column).lambda();
  const double expected[] = {4.0, 2.0, 0.0, 2.0};
  for (Index k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(lambda[k] - expected[k]), 0.0, 1e-14);
}

TEST(CliGen, RankDeficientEchoesRank) {
  const fs::path dir = scratch("gen_rank");
  const Result r = invoke({"gen", "rank_deficient", "8", "8", "r=5", "--out", (dir / "r.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rank: 5"), std::string::npos) << r.out;
}

TEST(CliGen, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"gen", "iid_gaussian", "4", "4"}).code, 1);
  EXPECT_EQ(invoke({"gen", "nonsense", "4", "4", "--out", "/tmp/x"}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  const Result unwritable = invoke({"gen", "iid_gaussian", "2", "2", "--out", "/nonexistent/dir/a.txt"});
  EXPECT_EQ(unwritable.code, 1);
  EXPECT_FALSE(unwritable.err.empty());
}

TEST(CliSolve, IdentityMatrixReachesElementwisePosterior) {
  const fs::path dir = scratch("solve_identity");
  write_matrix(dir / "I.txt", CMatrix::Identity(4, 4));
  CVector y(4);
  y << 1.0, -2.0, 0.5, 3.0;
  write_matrix(dir / "y.txt", y);
  const Result r = invoke({"solve", "--matrix", (dir / "I.txt").string(), "--y", (dir / "y.txt").string(),
                        "--x-true", (dir / "y.txt").string(), "--sigma2", "1", "--prior",
                        "gaussian(x0=0,tau0=1)", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("status=converged"), std::string::npos) << r.out;
  // Posterior mean y / 2; lmmse_gap is measured against the dense solve.
  EXPECT_NE(r.out.find("factorization=svd"), std::string::npos);
  const auto rel = column(dir / "trace_utamp.csv", "rel_change");
  EXPECT_LE(rel.back(), 1e-10);
  const std::string summary = r.out.substr(r.out.find("lmmse_gap=") + 10);
  EXPECT_LE(std::stod(summary), 1e-9);
}

TEST(CliSolve, AutoPicksDftForCirculantFiles) {
  const fs::path dir = scratch("solve_auto");
  ASSERT_EQ(invoke({"gen", "kind=circulant", "N=16", "taps=1,0.5,0.25", "--out", (dir / "c.txt").string()}).code, 0);
  const Result r = invoke({"solve", "--matrix", (dir / "c.txt").string(), "--circulant", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("factorization: dft (auto: circulant input)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("status=converged"), std::string::npos);
}

TEST(CliSolve, DftRequiresCirculantInput) {
  const fs::path dir = scratch("solve_dft_error");
  const Result r = invoke({"solve", "iid_gaussian", "4", "4", "--factorization", "dft", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("circulant"), std::string::npos);
}

TEST(CliSolve, ZeroIterationsWritesSingleRow) {
  const fs::path dir = scratch("solve_zero");
  const Result r = invoke({"solve", "iid_gaussian", "6", "6", "--algo", "amp-vec", "--max-iters", "0",
                        "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(drop_comments(slurp(dir / "trace_amp-vec.csv")));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "t,tau_x,tau_q,residual,rel_change,mse,status");
  EXPECT_EQ(rows[1].substr(rows[1].rfind(',') + 1), "max_iters");
}

TEST(CliSolve, OutputIsDeterministicApartFromTimestamp) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  for (const fs::path& dir : {a, b})
    ASSERT_EQ(invoke({"solve", "column_correlated", "12", "10", "--seed", "3", "--algo", "amp-scalar",
                   "--algo", "utamp", "--out", dir.string()}).code, 0);
  for (const char* name : {"trace_utamp.csv", "trace_amp-scalar.csv"}) {
    EXPECT_EQ(slurp(a / name).rfind("# ", 0), 0u);
    EXPECT_EQ(drop_comments(slurp(a / name)), drop_comments(slurp(b / name))) << name;
  }
}

TEST(CliSolve, GenOutputRereadIsBitIdentical) {
  const fs::path dir = scratch("roundtrip");
  ASSERT_EQ(invoke({"gen", "ill_conditioned", "6", "5", "seed=4", "--out", (dir / "a.txt").string()}).code, 0);
  const CMatrix once = read_matrix(dir / "a.txt");
  write_matrix(dir / "b.txt", once);
  EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "b.txt"));
  EXPECT_EQ(invoke({"solve", "--matrix", (dir / "a.txt").string(), "--out", dir.string()}).code, 0);
}

TEST(CliSolve, AllDivergedExitsWithTwo) {
  const fs::path dir = scratch("diverge");
  const Result r = invoke({"solve", "nonzero_mean", "64", "64", "--seed", "1", "--algo", "amp-scalar",
                        "--out", dir.string()});
  if (r.out.find("status=diverged") != std::string::npos) EXPECT_EQ(r.code, 2);
  else EXPECT_EQ(r.code, 0);
}

TEST(CliCertify, IdentityReport) {
  const fs::path dir = scratch("cert_identity");
  write_matrix(dir / "I.txt", CMatrix::Identity(4, 4));
  const Result r = invoke({"certify", "--matrix", (dir / "I.txt").string(), "--sigma2", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* key : {"tau_x: ", "tau_q: ", "alpha: ", "spectral_radius: ", "converges: true"})
    EXPECT_NE(r.out.find(key), std::string::npos) << key;
}

TEST(CliCertify, ZeroMatrixHasInfiniteTauQ) {
  const fs::path dir = scratch("cert_zero");
  write_matrix(dir / "Z.txt", CMatrix::Zero(3, 3));
  const Result r = invoke({"certify", "--matrix", (dir / "Z.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("tau_q: inf"), std::string::npos);
  EXPECT_NE(r.out.find("spectral_radius: 0\n"), std::string::npos);
  EXPECT_NE(r.out.find("converges: true"), std::string::npos);
}

TEST(CliCertify, NumericCheckOnRectangularInput) {
  const Result r = invoke({"certify", "iid_gaussian", "5", "3", "--seed", "2", "--check-numeric"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("numeric_discrepancy: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(r.out.substr(pos + 21)), 1e-8);
}

TEST(CliCertify, RejectsBgPrior) {
  const Result r = invoke({"certify", "iid_gaussian", "4", "4", "--prior", "bg(rho=0.2)"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Gaussian"), std::string::npos);
}

TEST(CliCompare, NonzeroMeanReport) {
  const fs::path dir = scratch("compare_nzm");
  const Result r = invoke({"compare", "nonzero_mean", "64", "64", "--seed", "1", "--out", dir.string()});
  ASSERT_NE(r.code, 1) << r.err;
  EXPECT_NE(r.out.find("certificate: "), std::string::npos);
  const auto rows = lines(drop_comments(slurp(dir / "compare.csv")));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "algorithm,factorization,status,iterations,nmse_db,residual,lmmse_gap");
  EXPECT_EQ(rows[3].rfind("utamp,svd,converged,", 0), 0u) << rows[3];
  EXPECT_TRUE(fs::exists(dir / "certificate.txt"));
}

TEST(CliCompare, CirculantSvdAndDftAgree) {
  const fs::path dir = scratch("compare_circ");
  const Result r = invoke({"compare", "kind=circulant", "N=16", "taps=1,-0.4,0.3,0.2", "--algo", "utamp-svd",
                        "--algo", "utamp-dft", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto svd = column(dir / "trace_utamp-svd.csv", "tau_x");
  const auto dft = column(dir / "trace_utamp-dft.csv", "tau_x");
  const std::size_t n = std::min(svd.size(), dft.size());
  for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(svd[t], dft[t], 1e-10);
}

TEST(CliCompare, BenignInstanceAllAgreeWithLmmse) {
  const fs::path dir = scratch("compare_benign");
  const Result r = invoke({"compare", "iid_gaussian", "32", "16", "--seed", "5", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(drop_comments(slurp(dir / "compare.csv")));
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_NE(rows[i].find(",converged,"), std::string::npos) << rows[i];
    EXPECT_LE(std::stod(rows[i].substr(rows[i].rfind(',') + 1)), 1e-6) << rows[i];
  }
}

TEST(CliCompare, NeedsTwoAlgorithms) {
  const Result r = invoke({"compare", "iid_gaussian", "4", "4", "--algo", "utamp", "--out",
                        scratch("compare_one").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(CliConfig, ReadsKeyValueFile) {
  const fs::path dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "[certify]\nsigma2=1\n# values with commas must be quoted\nprior=\"gaussian(x0=0,tau0=1)\"\n";
  }
  write_matrix(dir / "I.txt", CMatrix::Identity(3, 3));
  const Result r = invoke({"--config", (dir / "run.ini").string(), "certify", "--matrix", (dir / "I.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("tau_x: 0.618033988749"), std::string::npos) << r.out;
}

#include "utamp/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace utamp {

namespace {

double parse_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("not a number: '" + token + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("failed to format double");
  return std::string(buf, ptr);
}

CMatrix read_matrix(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("matrix file is empty");
  std::istringstream hs(header);
  long long rows = 0;
  long long cols = 0;
  std::string field;
  if (!(hs >> rows >> cols >> field)) throw ParseError("malformed header: '" + header + "'");
  std::string extra;
  if (hs >> extra) throw ParseError("trailing text in header: '" + header + "'");
  if (rows < 1 || cols < 1) throw ParseError("matrix dimensions must be positive");
  bool complex_valued = false;
  if (field == "complex") {
    complex_valued = true;
  } else if (field != "real") {
    throw ParseError("header field type must be 'real' or 'complex', got '" + field + "'");
  }

  CMatrix m(rows, cols);
  std::string token;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> token)) throw ParseError("matrix file ended early");
      const double re = parse_double(token);
      double im = 0.0;
      if (complex_valued) {
        if (!(in >> token)) throw ParseError("matrix file ended early");
        im = parse_double(token);
      }
      m(i, j) = Complex(re, im);
    }
  }
  if (in >> token) throw ParseError("unexpected trailing data in matrix file");
  return m;
}

CMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file " + path.string());
  return read_matrix(in);
}

CVector read_vector(const std::filesystem::path& path) {
  CMatrix m = read_matrix(path);
  if (m.cols() != 1) throw ParseError("expected a vector (N = 1) in " + path.string());
  return m.col(0);
}

void write_matrix(std::ostream& out, const CMatrix& m) {
  const bool real = is_real_valued(m);
  out << m.rows() << ' ' << m.cols() << (real ? " real" : " complex") << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(m(i, j).real());
      if (!real) out << ' ' << format_double(m(i, j).imag());
    }
    out << '\n';
  }
}

void write_matrix(const std::filesystem::path& path, const CMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write matrix file " + path.string());
  write_matrix(out, m);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace utamp

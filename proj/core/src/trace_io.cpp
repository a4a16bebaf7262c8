#include "utamp/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "utamp/matrix_io.hpp"

namespace utamp {

namespace {

// NaN renders as an empty cell; infinities as "inf" / "-inf".
std::string cell(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kTraceCsvHeader << '\n';
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const TraceRecord& r = trace.records[i];
    out << r.t << ',' << cell(r.tau_x) << ',' << cell(r.tau_q) << ',' << cell(r.residual) << ','
        << cell(r.rel_change) << ',' << (r.mse ? cell(*r.mse) : std::string()) << ',';
    if (i + 1 == trace.records.size()) out << to_string(trace.status);
    out << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace,
                     const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path.string());
  write_trace_csv(out, trace, comment);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace utamp

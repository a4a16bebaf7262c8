#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "utamp/solvers.hpp"

namespace utamp {

/// CSV header of a serialized Trace.
inline constexpr const char* kTraceCsvHeader = "t,tau_x,tau_q,residual,rel_change,mse,status";

/// One row per record; mse is empty without ground truth, undefined values
/// (tau_q, rel_change of the initial record) are empty, and the status column
/// is filled on the final row only. An optional comment line ("# ...") is
/// written first.
void write_trace_csv(std::ostream& out, const Trace& trace, const std::string& comment = {});
void write_trace_csv(const std::filesystem::path& path, const Trace& trace,
                     const std::string& comment = {});

}  // namespace utamp

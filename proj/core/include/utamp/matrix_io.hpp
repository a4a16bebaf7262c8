#pragma once

#include <filesystem>
#include <iosfwd>

#include "utamp/types.hpp"

namespace utamp {

/// Text matrix format: a header line "M N real" or "M N complex", then M
/// rows of whitespace-separated values in row-major order. Complex entries
/// are written as "re im" pairs. Vectors are stored with N = 1.
///
/// Values are written in shortest round-trip form, so write followed by read
/// reproduces every entry bit for bit.
CMatrix read_matrix(std::istream& in);
CMatrix read_matrix(const std::filesystem::path& path);
CVector read_vector(const std::filesystem::path& path);

/// Writes "real" when every imaginary part is zero, "complex" otherwise.
void write_matrix(std::ostream& out, const CMatrix& m);
void write_matrix(const std::filesystem::path& path, const CMatrix& m);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace utamp

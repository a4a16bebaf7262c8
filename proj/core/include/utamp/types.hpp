#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace utamp {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class FactorizationFailed : public Error {
public:
  using Error::Error;
};

class UnsupportedPrior : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

/// True when every entry has a zero imaginary part.
inline bool is_real_valued(const CMatrix& m) { return (m.imag().array() == 0.0).all(); }

inline bool all_finite(const CMatrix& m) { return m.allFinite(); }

}  // namespace utamp

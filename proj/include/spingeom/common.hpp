#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spingeom {

inline constexpr const char* kVersion = "0.3.1";

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user input was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to reach its certified accuracy.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Rank of the complex spinor module in dimension n, 2^floor(n/2).
inline int spinor_rank(int n) { return 1 << (n / 2); }

/// Maximal torus rank floor(n/2) of Spin(n).
inline int torus_rank(int n) { return n / 2; }

}  // namespace spingeom

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lod2s {

using Complex = std::complex<double>;
using Index = Eigen::Index;

using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

using SparseComplexMatrix = Eigen::SparseMatrix<Complex>;
using SparseRealMatrix = Eigen::SparseMatrix<double>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar>;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments (empty seeds, mismatched dimensions, bad indices).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Mesh subdivision that cannot resolve the requested subdomain geometry.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent setup, e.g. a periodic space requested on a non-periodic mesh.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Sparse factorization failure or residual above tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Failure of a localized or idealized corrector solve.
class CorrectorError : public Error {
 public:
  using Error::Error;
};

}  // namespace lod2s

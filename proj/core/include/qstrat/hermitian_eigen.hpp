#pragma once

// Dense Hermitian / real symmetric eigensolver: Householder reduction to a
// real symmetric tridiagonal matrix followed by implicit-shift QL.

#include <Eigen/Dense>

namespace qstrat::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // empty when not requested
};

struct HermitianEigen {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // empty when not requested
};

/// Only the lower triangle of `a` is referenced.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, bool want_vectors = true);
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a);

/// Only the lower triangle of `a` is referenced.
HermitianEigen hermitian_eigen(const Eigen::MatrixXcd& a, bool want_vectors = true);

/// Eigenvalues of a real symmetric tridiagonal matrix (diag, sub) in place;
/// when `z` is non-null its columns are rotated along with the QL sweeps.
void tridiagonal_ql(Eigen::VectorXd& diag, Eigen::VectorXd& sub, Eigen::MatrixXd* z);

}  // namespace qstrat::linalg

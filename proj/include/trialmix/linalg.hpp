#pragma once

#include <Eigen/Dense>

#include "trialmix/error.hpp"

namespace trialmix::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kMaxJacobiDim = 64;

struct SymEigen {
  VectorXd values;   ///< descending
  MatrixXd vectors;  ///< orthonormal columns, vectors.col(k) pairs with values(k)
};

/// Throws DimensionError unless `a` is square and symmetric within
/// tol * max(1, max|a_ij|).
void require_symmetric(const MatrixXd& a, double tol = 1e-12);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (dimension <= 64).
/// Sweeps until the off-diagonal Frobenius norm drops below 1e-12 * ||A||_F,
/// at most 100 sweeps.
SymEigen sym_eigen(const MatrixXd& a);

/// log|A| by Cholesky. Throws SingularityError if A is not positive definite.
double logdet_spd(const MatrixXd& a);

/// log|sigma_E (x) sigma_T| = T log|sigma_E| + E log|sigma_T|.
double kron_logdet(const MatrixXd& sigma_E, const MatrixXd& sigma_T);

/// vec(r)' (sigma_E (x) sigma_T)^-1 vec(r) = tr(sigma_T^-1 r sigma_E^-1 r'), r is T x E.
double kron_quad_form(const MatrixXd& sigma_E, const MatrixXd& sigma_T, const MatrixXd& r);

/// Symmetric inverse square root. Throws SingularityError when an eigenvalue
/// falls below 1e-12 * trace(A) / dim.
MatrixXd inv_sqrt(const MatrixXd& a);

/// Symmetric square root of a positive semi-definite matrix.
MatrixXd sqrt_psd(const MatrixXd& a);

VectorXd solve_spd(const MatrixXd& a, const VectorXd& rhs);
MatrixXd solve_spd(const MatrixXd& a, const MatrixXd& rhs);

/// Inverse of an SPD matrix, symmetrized.
MatrixXd inverse_spd(const MatrixXd& a);

/// Returns `a` unchanged when it is positive definite with condition number
/// <= 1e12. Otherwise adds a ridge of 1e-8 * trace(a) / dim (1e-8 when the
/// trace is not positive) to the diagonal and records a warning.
MatrixXd spd_guard(const MatrixXd& a, Warnings* warnings, const char* what = "matrix");

/// Precomputed inverses of the two Kronecker factors of
/// sigma_E (x) sigma_T, shared by every voxel in one EM iteration.
class KronPrecision {
 public:
  KronPrecision(const MatrixXd& sigma_E, const MatrixXd& sigma_T);

  int T() const { return static_cast<int>(inv_T_.rows()); }
  int E() const { return static_cast<int>(inv_E_.rows()); }
  const MatrixXd& inv_T() const { return inv_T_; }
  const MatrixXd& inv_E() const { return inv_E_; }
  double logdet() const { return logdet_; }

  /// sigma_T^-1 r sigma_E^-1, i.e. the precision applied to vec(r).
  MatrixXd apply(const MatrixXd& r) const;
  /// vec(r)' precision vec(r).
  double quad_form(const MatrixXd& r) const;
  /// vec(a)' precision vec(b).
  double inner(const MatrixXd& a, const MatrixXd& b) const;

 private:
  MatrixXd inv_T_;
  MatrixXd inv_E_;
  double logdet_ = 0.0;
};

}  // namespace trialmix::linalg

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "rrglab/sym_matrix.hpp"

namespace rrg {

/// Eigenpairs in descending order of eigenvalue.
struct EigenSystem {
  enum class Kind { full, partial };

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  ///< orthonormal columns aligned with values
  Kind kind = Kind::full;
  /// gap_flags[i] is set when values[i] is within the degeneracy tolerance of a neighbor.
  std::vector<bool> gap_flags;
  long matvecs = 0;

  int size() const { return static_cast<int>(values.size()); }
};

/// Dense solver cutoff; the LAB_DENSE_LIMIT environment variable overrides the default 4096.
int dense_limit();

/// 1e-8 * sqrt(d) for graph matrices, 1e-8 * max(1, |H|) otherwise.
double degeneracy_tolerance(const SymMatrix& h);

/// Symmetric tridiagonal eigenproblem by implicit-shift QL. On entry `diag`
/// and `offdiag` (offdiag[i] couples i and i+1) describe T; `z` holds the
/// basis to rotate (identity for T's own eigenvectors) or is empty when only
/// values are wanted. On exit diag holds eigenvalues in ascending order and
/// the columns of z the matching vectors.
void tridiagonal_ql(Eigen::VectorXd& diag, Eigen::VectorXd& offdiag, Eigen::MatrixXd* z);

/// Householder reduction A = Q T Q^T. `q` may be null when only T is needed.
void householder_tridiagonalize(Eigen::MatrixXd a, Eigen::VectorXd& diag,
                                Eigen::VectorXd& offdiag, Eigen::MatrixXd* q);

/// Full eigendecomposition of a dense symmetric matrix (values descending).
void symmetric_eigen(const Eigen::MatrixXd& a, Eigen::VectorXd& values, Eigen::MatrixXd* vectors);

/// Full EigenSystem by Householder tridiagonalization and implicit QL.
/// Throws TooLarge above dense_limit() and NoConvergence on QL stall.
EigenSystem full_eigensystem(const SymMatrix& h);

struct LanczosOptions {
  int max_basis = 0;       ///< Krylov basis size per restart cycle; 0 picks a default
  long max_matvecs = 0;    ///< 0 picks a default proportional to n
  std::uint64_t seed = 0;  ///< random start vector and breakdown refills
  std::optional<Eigen::VectorXd> start;
  /// Orthonormal vectors whose span is excluded from the search.
  std::vector<Eigen::VectorXd> deflate;
  double degeneracy_tol = -1.0;  ///< negative: degeneracy_tolerance(h)
};

/// Largest-k eigenpairs by thick-restart Lanczos with full reorthogonalization.
/// Stops when every Ritz residual is below tol * max(1, |H|).
EigenSystem topk_eigenpairs(const SymMatrix& h, int k, double tol, const LanczosOptions& options = {});
EigenSystem topk_eigenpairs(const SymOperator& op, int k, double tol, const LanczosOptions& options,
                            double degeneracy_tol);

}  // namespace rrg

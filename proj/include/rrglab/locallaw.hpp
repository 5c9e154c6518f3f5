#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rrglab/direction.hpp"
#include "rrglab/eigensolvers.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/spectral.hpp"

namespace rrg {

using cplx = std::complex<double>;

/// Y.col(j) = A_j X.col(j) for a family of real symmetric operators A_j.
using BlockApply = std::function<void(const Eigen::MatrixXcd& x, Eigen::MatrixXcd& y)>;

struct ShiftedSolve {
  Eigen::MatrixXcd x;
  Eigen::VectorXd residuals;  ///< true residual norms |(A_j - z_j) x_j - b_j|
  long matvecs = 0;           ///< block applications
};

/// Solves (A_j - z_j) x_j = b_j for all columns at once by conjugate
/// orthogonal CG (complex-symmetric CG), restarting from the true residual
/// until every column satisfies |r_j| <= tol * max(1, |b_j|). Throws
/// SolveFailure after max_matvecs block applications.
ShiftedSolve solve_shifted(const BlockApply& apply, const Eigen::VectorXcd& shifts,
                           const Eigen::MatrixXcd& b, double tol, long max_matvecs);

/// Single solve (H - z) x = b with the default cap of 20 n applications.
ShiftedSolve solve_shifted(const SymMatrix& h, cplx z, const Eigen::VectorXcd& b, double tol = 1e-11);

enum class ResolventPath { solve, eigen_expansion };

/// <q, (H - z)^{-1} q> (bilinear, q real). The eigen-expansion path needs the
/// dense solver; the solve path checks |(H - z)x - q| <= 1e-10.
cplx resolvent_quadratic_form(const SymMatrix& h, const ComplexEnergy& z, const Direction& q,
                              ResolventPath path = ResolventPath::solve);
/// Sum_i <v_i, q>^2 / (lambda_i - z) over a full eigensystem.
cplx resolvent_quadratic_form(const EigenSystem& es, const ComplexEnergy& z, const Eigen::VectorXd& q);

struct LocalLawSample {
  int n = 0;
  int d = 0;
  ComplexEnergy z;
  std::string q_id;
  cplx gq;
  double err = 0.0;             ///< |gq - m_sc(z)|
  double remainder_norm = 0.0;  ///< |G q - m_sc q|
  double fluct_norm = 0.0;      ///< |(H - m_sc) G q|
  double v_norm = 0.0;          ///< |G q|
  double solve_residual = 0.0;
  std::uint64_t seed = 0;
};

/// Fills every LocalLawSample field from one shifted solve. Requires q ⊥ e.
LocalLawSample local_law_error(const RegularGraph& g, const ComplexEnergy& z, const Direction& q,
                               std::uint64_t seed, ResolventPath path = ResolventPath::solve);

struct Fluctuation {
  Eigen::VectorXcd F;
  /// |F - (q + (z - m_sc) v)|, zero up to rounding since (H - z) v = q.
  double identity_residual = 0.0;
};

/// F = (H - m_sc(z)) v with v = G(z) q.
Fluctuation fluctuation_vector(const SymMatrix& h, const ComplexEnergy& z, const Direction& q);

/// |R| with R = v - m_sc(z) q = v + q / (z + m_sc(z)).
double vector_remainder_norm(const SymMatrix& h, const ComplexEnergy& z, const Direction& q);

struct ScanCell {
  int n = 0;
  int d = 0;
  ComplexEnergy z;
};

struct ScanCellStats {
  ScanCell cell;
  int samples = 0;
  double var_re = 0.0;
  double var_im = 0.0;
  double mean_err = 0.0;
  double median_err = 0.0;
};

struct ScanFit {
  int d = 0;
  std::string component;  ///< "re" or "im"
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

struct VarianceScan {
  std::vector<LocalLawSample> rows;  ///< cell-major, then sample index
  std::vector<ScanCellStats> cells;
  std::vector<ScanFit> fits;  ///< log variance vs log n, per d with >= 3 distinct n
};

/// Per cell, `samples` fresh graphs with random q ⊥ e; sample seeds are
/// derive_seed(derive_seed(base_seed, cell), i).
VarianceScan ensemble_variance_scan(const std::vector<ScanCell>& grid, int samples,
                                    std::uint64_t base_seed, int workers = 1);

/// CSV with columns n,d,E,eta,sample_idx,re_gq,im_gq,err,remainder_norm,fluct_norm,seed.
std::string scan_csv(const VarianceScan& scan);

}  // namespace rrg

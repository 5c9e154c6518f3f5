#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrglab/direction.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/spectral.hpp"
#include "rrglab/steinlab.hpp"
#include "rrglab/sym_matrix.hpp"

namespace rrg {

/// sqrt(1 - t) H0 + sqrt(t) W with W = sample_constrained_goe(n, seed).
/// t = 0 returns H0 itself. Throws TimeOutOfRange outside [0, 1].
SymMatrix goe_evolved(const SymMatrix& h0, double t, std::uint64_t seed);

/// (1 - s) H0 + s Ht. Throws CouplingOutOfRange outside [0, 1].
SymMatrix interpolated_matrix(const SymMatrix& h0, const SymMatrix& ht, double s);

/// min(1, sqrt(d t / n)).
double optimal_s(double d, double t, double n);

/// Largest |eigenvalue| of a dense symmetric matrix by Lanczos on H and -H.
double operator_norm(const SymMatrix& h, double tol = 1e-10);

struct DeltaNormRow {
  double t = 0.0;
  int samples = 0;
  double mean_sq = 0.0;  ///< mean of |Delta_t|_op^2
  Interval ci;           ///< mean +- 1.96 standard errors
  double predictor = 0.0;  ///< d t + d^2 / n
};

struct DeltaNormStats {
  int n = 0;
  int d = 0;
  std::vector<DeltaNormRow> rows;
  double fit_coefficient = 0.0;  ///< C in mean_sq ~ C (d t + d^2/n), through the origin
  double fit_stderr = 0.0;
  /// Largest |Lanczos norm - dense norm| over the checked samples (first
  /// sample of each t when n <= dense_limit()); negative when nothing was checked.
  double oracle_deviation = -1.0;
};

/// Delta_t = Ht - H0 over fresh graphs and GOE draws; sample i of t-index k
/// uses derive_seed(derive_seed(base_seed, k), i).
DeltaNormStats delta_norm_stats(int n, int d, const std::vector<double>& t_grid, int samples,
                                std::uint64_t base_seed, int workers = 1);

struct CouplingPoint {
  double s = 0.0;
  std::complex<double> gq;
  double err = 0.0;
};

struct CouplingProfile {
  int n = 0;
  int d = 0;
  double t = 0.0;
  ComplexEnergy z;
  std::uint64_t seed = 0;
  std::vector<CouplingPoint> points;  ///< in s_grid order
  std::size_t argmin = 0;             ///< first index attaining the minimum err
  double max_jump = 0.0;
  double median_jump = 0.0;
  /// max jump between adjacent grid points <= 10 x median jump
  bool continuous = true;
};

/// err(s) = |<q, (H_{t,s} - z)^{-1} q> - m_sc(z)| across s_grid, with one GOE
/// realization (derive_seed(seed, stream::goe)) shared by the whole grid
/// unless fresh_realizations is set.
CouplingProfile coupling_error_profile(const RegularGraph& g, double t, const ComplexEnergy& z, const Direction& q,
                                       const std::vector<double>& s_grid, std::uint64_t seed,
                                       bool fresh_realizations = false);

/// 0 followed by count-1 points geometric from lo to 1.
std::vector<double> log_s_grid(int count, double lo = 1e-3);

struct ProfileEnsemble {
  std::vector<CouplingProfile> profiles;
  double median_argmin_s = 0.0;
  double optimal = 0.0;  ///< optimal_s(d, t, n)
  int discontinuous = 0;
};

/// `count` profiles on fresh graphs and random q ⊥ e; profile i is seeded
/// derive_seed(base_seed, i).
ProfileEnsemble coupling_profile_ensemble(int n, int d, double t, const ComplexEnergy& z,
                                          const std::vector<double>& s_grid, int count, std::uint64_t base_seed,
                                          int workers = 1);

/// CSV with columns n,d,t,s,E,eta,err,argmin_flag,seed.
std::string profile_csv(const std::vector<CouplingProfile>& profiles);

}  // namespace rrg

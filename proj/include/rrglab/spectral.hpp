#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "rrglab/eigensolvers.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/sym_matrix.hpp"

namespace rrg {

/// Spectral parameter z = E + i*eta.
struct ComplexEnergy {
  double E = 0.0;
  double eta = 0.0;

  std::complex<double> z() const { return {E, eta}; }

  /// |E - 2| <= n^(-2/3 + eps) and n^(-2/3) <= eta <= 1.
  bool edge_regime(int n, double eps = 0.05) const;
};

/// A / sqrt(d), held as a scaled graph adjacency.
SymMatrix normalize_adjacency(const RegularGraph& g);

struct SecondEigenpair {
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  Eigen::VectorXd u2;
  bool degenerate = false;
  long matvecs = 0;
};

struct SecondEigenpairOptions {
  double tol = 1e-11;
  /// Multiply u2 by an independent uniform sign drawn from the seed.
  bool randomize_sign = true;
  /// Warm start for the Lanczos iteration (e.g. u2 of a nearby graph).
  std::optional<Eigen::VectorXd> start;
};

/// Second-largest eigenpair of A/sqrt(d), found by Lanczos on the complement
/// of the all-ones vector. Without sign randomization the largest-magnitude
/// coordinate of u2 is positive.
SecondEigenpair second_eigenpair(const RegularGraph& g, std::uint64_t seed,
                                 const SecondEigenpairOptions& options = {});

/// Stieltjes transform of the semicircle law, the root of m^2 + z m + 1 = 0
/// with Im m > 0 for Im z > 0. On the real axis only |E| > 2 is allowed.
std::complex<double> m_sc(std::complex<double> z);
std::complex<double> m_sc(const ComplexEnergy& z);

/// P W P with W a GOE matrix (off-diagonal variance 1/n, diagonal 2/n) and
/// P = I - e e^T / n, so the all-ones direction lies in the kernel.
SymMatrix sample_constrained_goe(int n, std::uint64_t seed);

/// Standard normal distribution function; clamps to 0 / 1 beyond |x| > 8.
double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace rrg

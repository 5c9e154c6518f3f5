#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rrglab/direction.hpp"
#include "rrglab/eigensolvers.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/steinlab.hpp"

namespace rrg {

enum class FunctionalMode { exact_recompute, perturbative };

struct GraphFunctional {
  std::string name;
  std::function<double(const RegularGraph&)> evaluate;
  FunctionalMode mode = FunctionalMode::exact_recompute;
};

/// 1 if the graph contains the edge, else 0.
GraphFunctional edge_indicator(Edge e);
GraphFunctional constant_functional(double c);
/// alpha F + beta G, evaluated pointwise.
GraphFunctional linear_combination(double alpha, const GraphFunctional& f, double beta, const GraphFunctional& g);

struct DerivativeRecord {
  Edge edge;
  std::string functional;
  double value = 0.0;     ///< sum over valid switchings of F(switched) - F(g)
  double averaged = 0.0;  ///< value / switch_count (0 when there are none)
  int switch_count = 0;
};

/// Discrete derivative at edge e: the bare sum of switch differences.
/// Throws EdgeNotPresent; every switched graph is checked with validate_regular.
DerivativeRecord malliavin_derivative(const RegularGraph& g, Edge e, const GraphFunctional& f);

enum class PerturbationFormula {
  standard,  ///< first-order theory over the full eigensystem
  alternative,  ///< -((u2)_i e_j + (u2)_j e_i) / lambda_2, for comparison only
};

/// d u2 / d A_ij for H = A / sqrt(d), with A_ij and A_ji moving together, for
/// the u2 signed as in canonical_second_eigenvector.
/// Throws DegenerateEigenvalue when lambda_2 is flagged and TooLarge above
/// the dense limit.
Eigen::VectorXd eigvec_perturbation(const RegularGraph& g, int i, int j,
                                    PerturbationFormula formula = PerturbationFormula::standard);
/// Same, reusing a full eigensystem of A / sqrt(d) (index 1 is u2).
Eigen::VectorXd eigvec_perturbation(const EigenSystem& es, int d, int i, int j,
                                    PerturbationFormula formula = PerturbationFormula::standard);

/// Second eigenvector of A / sqrt(d) with the largest-|coordinate| entry positive.
Eigen::VectorXd canonical_second_eigenvector(const SymMatrix& h);

struct EdgeEnergyCheck {
  Edge edge;
  int switch_count = 0;
  double perturbative = 0.0;
  double exact = 0.0;
  double relative_deviation = 0.0;  ///< |perturbative - exact| / |exact|
};

struct DerivativeEnergy {
  double energy = 0.0;  ///< sum over edges of (D_e X)^2, perturbative mode
  std::vector<DerivativeRecord> per_edge;
  std::vector<EdgeEnergyCheck> checks;
  double max_relative_deviation = 0.0;
};

/// X = sqrt(n) <q, u2> with u2 from the dense eigensystem. The exact-recompute
/// cross-check covers `check_edges` edges drawn with `seed` (all edges when
/// check_edges >= |E|) and warm-starts Lanczos from the unswitched u2.
DerivativeEnergy overlap_derivative_energy(const RegularGraph& g, const Direction& q, int check_edges = 20,
                                           std::uint64_t seed = 0, int workers = 1);

struct VarianceDecomposition {
  int n = 0;
  int d = 0;
  int M = 0;
  double variance = 0.0;              ///< direct ensemble variance
  double reconstructed = 0.0;         ///< 1 + kappa_2
  double abs_deviation = 0.0;         ///< |Var - 1|
  Interval ci_abs_deviation;          ///< bootstrap interval of |Var - 1|
  double bound = 0.0;                 ///< C / d
  bool within_bound = false;
  double normalized_kappa2 = 0.0;     ///< kappa_2 of X / sigma-hat, 0 up to rounding
  Interval ci_kappa2;
  int excluded = 0;
};

/// Frozen constant C in the diagnostic |Var - 1| <= C / d.
inline constexpr double kVarianceBoundC = 2.0;

VarianceDecomposition variance_decomposition_check(int n, int d, int M, const DirectionSpec& q,
                                                   std::uint64_t base_seed, int workers = 1,
                                                   SampleHook hook = {});

/// CSV with columns n,d,edge_i,edge_j,functional,derivative,switch_count,mode.
std::string derivative_csv(int n, int d, const std::vector<DerivativeRecord>& records, const std::string& mode);

}  // namespace rrg

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rrglab/direction.hpp"
#include "rrglab/graph.hpp"

namespace rrg {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

/// Ordinary least squares of log y on log x. Throws DegenerateFit with fewer
/// than 3 points, fewer than 2 distinct x, or a non-positive coordinate.
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points);

/// Exact sup |F_M - Phi| over the sorted sample. Throws EmptySample.
double ks_statistic(std::vector<double> samples);

struct CumulantStats {
  double variance = 0.0;  ///< central second moment (divisor M)
  double kappa2 = 0.0;    ///< variance - 1
  double kappa3 = 0.0;    ///< third moment of the standardized sample
  double kappa4 = 0.0;    ///< fourth moment of the standardized sample minus 3
  Interval ci_variance, ci_kappa2, ci_kappa3, ci_kappa4;
  int resamples = 0;
};

/// Plug-in moments with percentile bootstrap CIs (95%). Throws
/// InvalidArgument below 100 samples and DegenerateSample on zero variance.
CumulantStats cumulants(const std::vector<double>& samples, std::uint64_t seed, int resamples = 1000);

struct TestFunction {
  std::string name;
  std::function<double(double)> h;
  double gaussian_mean = 0.0;  ///< E h(Z) for Z standard normal
};

/// cos (E = e^{-1/2}), clip (x clipped to [-3, 3], E = 0), sqclip (min(x^2, 9)).
const std::vector<TestFunction>& builtin_test_functions();

/// |mean h(X) - E h(Z)| per named test function. Throws UnknownTestFunction.
std::map<std::string, double> stein_discrepancy(const std::vector<double>& samples,
                                                const std::vector<std::string>& family);

struct Overlap {
  double x = 0.0;  ///< sqrt(n) <q, u2>
  bool degenerate = false;
};

/// sqrt(n) <q, u2> with the sign-randomized u2 of second_eigenpair(g, seed).
Overlap overlap(const RegularGraph& g, const Direction& q, std::uint64_t seed);

struct DirectionSpec {
  DirectionKind kind = DirectionKind::coordinate_difference;
  DirectionParams params;
};

/// Replaces the overlap of sample i (seeded seed_i) in ensemble runs; a test
/// hook for feeding known streams through the statistics pipeline.
using SampleHook = std::function<double(std::size_t index, std::uint64_t seed)>;

/// Standard normal draws keyed by the sample seed.
SampleHook normal_stream_hook();

struct EnsembleConfig {
  int n = 0;
  int d = 0;
  int M = 0;
  DirectionSpec direction;
  std::uint64_t base_seed = 0;
  int workers = 1;
  SampleHook hook;  ///< empty: real graph overlaps
};

struct EnsembleResult {
  int n = 0;
  int d = 0;
  int M = 0;
  std::string direction;
  std::uint64_t base_seed = 0;

  std::vector<double> samples;  ///< index order, degenerate samples removed
  std::vector<std::size_t> sample_index;
  int excluded = 0;
  double ks = 0.0;
  Interval ci_ks;
  CumulantStats stats;
  std::map<std::string, double> stein;
};

/// M samples with seed_i = derive_seed(base_seed, i); the direction is drawn
/// once from derive_seed(base_seed, stream::direction). Throws ExcessDegeneracy
/// when more than M/10 samples have a degenerate second eigenvalue.
EnsembleResult run_ensemble(const EnsembleConfig& config);

struct BerryEsseenPlan {
  std::vector<int> ns;
  std::vector<int> ds;
  int M = 0;
  DirectionSpec direction;
  std::uint64_t base_seed = 0;
  int workers = 1;
  /// Adds a d-supported (support = d) ensemble per cell for the kappa_4 table.
  bool kappa4_table = false;
  int bootstrap = 1000;
  SampleHook hook;
};

struct SlopeFit {
  std::string axis;  ///< "N" (fixed d) or "d" (fixed N)
  int fixed = 0;
  ScalingFit fit;
  Interval ci_slope;  ///< 95% percentile bootstrap over within-cell resamples
};

struct Kappa4Row {
  int n = 0;
  int d = 0;
  double kappa4 = 0.0;
  Interval ci;
  double variance = 0.0;
  /// The raw support vector (not orthogonal to e) has overlap scaled by
  /// sqrt(1 - d/n); its variance is variance * (1 - d/n), kappa_4 unchanged.
  double variance_unprojected = 0.0;
};

struct BerryEsseenReport {
  std::vector<EnsembleResult> cells;  ///< ns-major, then ds
  std::vector<SlopeFit> fits;
  std::vector<Kappa4Row> kappa4;
};

/// Every (n, d) cell gets seed derive_seed(base_seed, cell index).
BerryEsseenReport berry_esseen_experiment(const BerryEsseenPlan& plan);

}  // namespace rrg

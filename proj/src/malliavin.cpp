#include "rrglab/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rrglab/error.hpp"
#include "rrglab/parallel.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

namespace rrg {

namespace {

void require_nondegenerate(const EigenSystem& es) {
  if (es.size() < 3) fail(ErrorKind::DegenerateEigenvalue, "need at least three eigenvalues");
  if (es.gap_flags[1]) fail(ErrorKind::DegenerateEigenvalue, "lambda_2 is degenerate");
}

// Entries of A touched by a switching, with the sign of the change.
std::array<std::pair<Edge, double>, 4> entry_changes(const Switching& s) {
  const auto added = s.replacement();
  return {{{s.first, -1.0}, {s.second, -1.0}, {added[0], 1.0}, {added[1], 1.0}}};
}

}  // namespace

GraphFunctional edge_indicator(Edge e) {
  const Edge key = make_edge(e.u, e.v);
  return {"edge(" + std::to_string(key.u) + "," + std::to_string(key.v) + ")",
          [key](const RegularGraph& g) { return g.has_edge(key.u, key.v) ? 1.0 : 0.0; }};
}

GraphFunctional constant_functional(double c) {
  std::ostringstream name;
  name << "const(" << c << ")";
  return {name.str(), [c](const RegularGraph&) { return c; }};
}

GraphFunctional linear_combination(double alpha, const GraphFunctional& f, double beta, const GraphFunctional& g) {
  std::ostringstream name;
  name << alpha << "*" << f.name << "+" << beta << "*" << g.name;
  return {name.str(), [alpha, beta, fe = f.evaluate, ge = g.evaluate](const RegularGraph& x) {
            return alpha * fe(x) + beta * ge(x);
          }};
}

DerivativeRecord malliavin_derivative(const RegularGraph& g, Edge e, const GraphFunctional& f) {
  const Edge key = make_edge(e.u, e.v);
  if (!g.has_edge(key.u, key.v))
    fail(ErrorKind::EdgeNotPresent, "edge (" + std::to_string(key.u) + "," + std::to_string(key.v) + ") not in graph");
  const auto switchings = list_switchable_pairs(g, key);
  const double base = f.evaluate(g);
  DerivativeRecord rec;
  rec.edge = key;
  rec.functional = f.name;
  rec.switch_count = static_cast<int>(switchings.size());
  for (const auto& s : switchings) {
    const RegularGraph switched = apply_switching(g, s);
    if (!is_valid_regular(switched)) fail(ErrorKind::InvalidSwitching, "switched graph is not regular");
    rec.value += f.evaluate(switched) - base;
  }
  rec.averaged = rec.switch_count > 0 ? rec.value / rec.switch_count : 0.0;
  return rec;
}

Eigen::VectorXd eigvec_perturbation(const EigenSystem& es, int d, int i, int j, PerturbationFormula formula) {
  const int n = static_cast<int>(es.vectors.rows());
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) fail(ErrorKind::InvalidArgument, "need distinct vertices i, j");
  require_nondegenerate(es);
  // derivative of the canonically signed u2 (largest |coordinate| positive)
  Eigen::VectorXd u2 = es.vectors.col(1);
  Eigen::Index pivot = 0;
  u2.cwiseAbs().maxCoeff(&pivot);
  if (u2[pivot] < 0) u2 = -u2;
  const double lambda2 = es.values[1];

  if (formula == PerturbationFormula::alternative) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    out[j] -= u2[i] / lambda2;
    out[i] -= u2[j] / lambda2;
    return out;
  }
  const double sd = std::sqrt(static_cast<double>(d));
  Eigen::VectorXd coeff(es.size());
  for (int k = 0; k < es.size(); ++k) {
    if (k == 1) {
      coeff[k] = 0.0;
      continue;
    }
    coeff[k] = (es.vectors(i, k) * u2[j] + es.vectors(j, k) * u2[i]) / (sd * (lambda2 - es.values[k]));
  }
  return es.vectors * coeff;
}

Eigen::VectorXd eigvec_perturbation(const RegularGraph& g, int i, int j, PerturbationFormula formula) {
  return eigvec_perturbation(full_eigensystem(normalize_adjacency(g)), g.d(), i, j, formula);
}

Eigen::VectorXd canonical_second_eigenvector(const SymMatrix& h) {
  const EigenSystem es = full_eigensystem(h);
  Eigen::VectorXd u = es.vectors.col(1);
  Eigen::Index pivot = 0;
  u.cwiseAbs().maxCoeff(&pivot);
  if (u[pivot] < 0) u = -u;
  return u;
}

DerivativeEnergy overlap_derivative_energy(const RegularGraph& g, const Direction& q, int check_edges,
                                           std::uint64_t seed, int workers) {
  if (q.n != g.n()) fail(ErrorKind::InvalidArgument, "direction dimension does not match the graph");
  const int n = g.n();
  const double sn = std::sqrt(static_cast<double>(n));
  const auto& edges = g.edges();
  std::vector<std::vector<Switching>> switchings;
  bool any = false;
  for (const auto& e : edges) {
    switchings.push_back(list_switchable_pairs(g, e));
    any = any || !switchings.back().empty();
  }
  DerivativeEnergy out;
  // switchless graphs (K_{d+1}) have zero derivative whatever the spectrum
  if (!any) {
    for (const auto& e : edges) out.per_edge.push_back({e, "overlap", 0.0, 0.0, 0});
    return out;
  }

  const EigenSystem es = full_eigensystem(normalize_adjacency(g));
  require_nondegenerate(es);
  const Eigen::VectorXd u2 = es.vectors.col(1);
  const double lambda2 = es.values[1];

  // <q, du2/dA_ij> = grad_i u2_j + grad_j u2_i
  Eigen::VectorXd w = es.vectors.transpose() * q.coords;
  const double sd = std::sqrt(static_cast<double>(g.d()));
  for (int k = 0; k < es.size(); ++k) w[k] = k == 1 ? 0.0 : w[k] / (sd * (lambda2 - es.values[k]));
  const Eigen::VectorXd grad = es.vectors * w;
  auto dx = [&](Edge e) { return sn * (grad[e.u] * u2[e.v] + grad[e.v] * u2[e.u]); };

  for (std::size_t k = 0; k < edges.size(); ++k) {
    DerivativeRecord rec;
    rec.edge = edges[k];
    rec.functional = "overlap";
    rec.switch_count = static_cast<int>(switchings[k].size());
    for (const auto& s : switchings[k])
      for (const auto& [entry, sign] : entry_changes(s)) rec.value += sign * dx(entry);
    rec.averaged = rec.switch_count > 0 ? rec.value / rec.switch_count : 0.0;
    out.energy += rec.value * rec.value;
    out.per_edge.push_back(rec);
  }

  // exact-recompute cross-check on a seeded subset of edges
  std::vector<std::size_t> picked(edges.size());
  std::iota(picked.begin(), picked.end(), 0);
  if (check_edges < static_cast<int>(edges.size())) {
    Rng rng = make_rng(seed);
    std::shuffle(picked.begin(), picked.end(), rng);
    picked.resize(static_cast<std::size_t>(std::max(check_edges, 0)));
    std::sort(picked.begin(), picked.end());
  }
  const double x0 = sn * q.coords.dot(u2);
  out.checks.resize(picked.size());
  parallel_for(picked.size(), workers, [&](std::size_t c) {
    const auto& rec = out.per_edge[picked[c]];
    EdgeEnergyCheck check;
    check.edge = rec.edge;
    check.switch_count = rec.switch_count;
    check.perturbative = rec.value;
    SecondEigenpairOptions options;
    options.randomize_sign = false;
    options.start = u2;
    for (const auto& s : switchings[picked[c]]) {
      const auto pair = second_eigenpair(apply_switching(g, s), derive_seed(seed, picked[c]), options);
      const double aligned = pair.u2.dot(u2) < 0 ? -1.0 : 1.0;
      check.exact += aligned * sn * q.coords.dot(pair.u2) - x0;
    }
    const double scale = std::abs(check.exact);
    check.relative_deviation =
        scale > 0 ? std::abs(check.perturbative - check.exact) / scale : std::abs(check.perturbative);
    out.checks[c] = check;
  });
  for (const auto& c : out.checks) out.max_relative_deviation = std::max(out.max_relative_deviation, c.relative_deviation);
  return out;
}

VarianceDecomposition variance_decomposition_check(int n, int d, int M, const DirectionSpec& q, std::uint64_t base_seed,
                                                   int workers, SampleHook hook) {
  if (M < 500) fail(ErrorKind::InvalidArgument, "variance decomposition needs M >= 500");
  EnsembleConfig config{n, d, M, q, base_seed, workers, std::move(hook)};
  const EnsembleResult ens = run_ensemble(config);

  VarianceDecomposition out;
  out.n = n;
  out.d = d;
  out.M = M;
  out.excluded = ens.excluded;
  out.variance = ens.stats.variance;
  out.reconstructed = 1.0 + ens.stats.kappa2;
  out.abs_deviation = std::abs(out.variance - 1.0);
  const double lo = ens.stats.ci_variance.lo - 1.0;
  const double hi = ens.stats.ci_variance.hi - 1.0;
  out.ci_abs_deviation = lo <= 0 && hi >= 0 ? Interval{0.0, std::max(-lo, hi)}
                                            : Interval{std::min(std::abs(lo), std::abs(hi)), std::max(std::abs(lo), std::abs(hi))};
  out.bound = kVarianceBoundC / d;
  out.within_bound = out.abs_deviation <= out.bound;
  out.ci_kappa2 = ens.stats.ci_kappa2;

  const double sigma = std::sqrt(out.variance);
  std::vector<double> normalized;
  for (double x : ens.samples) normalized.push_back(x / sigma);
  double mean = std::accumulate(normalized.begin(), normalized.end(), 0.0) / normalized.size();
  double m2 = 0;
  for (double x : normalized) m2 += (x - mean) * (x - mean);
  out.normalized_kappa2 = m2 / normalized.size() - 1.0;
  return out;
}

std::string derivative_csv(int n, int d, const std::vector<DerivativeRecord>& records, const std::string& mode) {
  std::ostringstream out;
  out.precision(17);
  out << "n,d,edge_i,edge_j,functional,derivative,switch_count,mode\n";
  for (const auto& r : records)
    out << n << ',' << d << ',' << r.edge.u << ',' << r.edge.v << ',' << r.functional << ',' << r.value << ','
        << r.switch_count << ',' << mode << '\n';
  return out.str();
}

}  // namespace rrg

#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "rrglab/error.hpp"
#include "rrglab/malliavin.hpp"
#include "rrglab/spectral.hpp"

using namespace rrg;

namespace {

template <class Fn>
bool throws_kind(ErrorKind kind, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

RegularGraph cycle6() { return RegularGraph(6, 2, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}); }

RegularGraph k4() { return RegularGraph(4, 3, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }

// second eigenvector of a dense symmetric matrix (Eigen's solver), sign fixed
// by the reference vector
Eigen::VectorXd second_vector(const Eigen::MatrixXd& h, const Eigen::VectorXd& reference) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  Eigen::VectorXd v = solver.eigenvectors().col(h.rows() - 2);
  if (v.dot(reference) < 0) v = -v;
  return v;
}

Eigen::VectorXd max_coordinate_positive(Eigen::VectorXd v) {
  Eigen::Index at;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0) v = -v;
  return v;
}

// central difference of u2 along A_ij = A_ji
Eigen::VectorXd finite_difference(const RegularGraph& g, int i, int j, double delta) {
  const Eigen::MatrixXd h = normalize_adjacency(g).to_dense();
  const Eigen::VectorXd u2 = max_coordinate_positive(second_vector(h, Eigen::VectorXd::Ones(h.rows())));
  Eigen::MatrixXd bump = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  bump(i, j) = bump(j, i) = delta / std::sqrt(static_cast<double>(g.d()));
  return (second_vector(h + bump, u2) - second_vector(h - bump, u2)) / (2 * delta);
}

}  // namespace

TEST_CASE("derivative of an edge indicator on the 6-cycle") {
  const auto r = malliavin_derivative(cycle6(), {0, 1}, edge_indicator({0, 1}));
  CHECK(r.value == -4.0);
  CHECK(r.switch_count == 4);
  CHECK(r.averaged == -1.0);
  CHECK(r.functional == "edge(0,1)");

  // edge (0,3) appears in exactly one of the four switched graphs
  CHECK(malliavin_derivative(cycle6(), {0, 1}, edge_indicator({0, 3})).value == 1.0);
  CHECK(throws_kind(ErrorKind::EdgeNotPresent, [] { malliavin_derivative(cycle6(), {0, 2}, edge_indicator({0, 1})); }));
}

TEST_CASE("switchless graphs and constant functionals") {
  const auto complete = k4();
  for (const Edge e : complete.edges()) {
    const auto r = malliavin_derivative(complete, e, edge_indicator({0, 1}));
    CHECK(r.value == 0.0);
    CHECK(r.switch_count == 0);
  }
  const auto g = sample_configuration_model(40, 3, 5);
  for (const Edge e : g.edges()) CHECK(malliavin_derivative(g, e, constant_functional(2.5)).value == 0.0);

  const auto energy = overlap_derivative_energy(complete, build_direction(DirectionKind::coordinate_difference, 4, {}, 0));
  CHECK(energy.energy == 0.0);
  CHECK(energy.per_edge.size() == 6);
}

TEST_CASE("derivative is linear in the functional") {
  const auto g = sample_configuration_model(30, 4, 8);
  GraphFunctional triangles{"triangles", [](const RegularGraph& h) {
                              double count = 0;
                              for (const Edge e : h.edges())
                                for (int w = 0; w < h.n(); ++w)
                                  if (w != e.u && w != e.v && h.has_edge(e.u, w) && h.has_edge(e.v, w)) count += 1;
                              return count / 3;
                            }};
  const auto f = edge_indicator(g.edges()[3]);
  const auto combo = linear_combination(2.0, f, -0.5, triangles);
  for (const Edge e : g.edges()) {
    const double lhs = malliavin_derivative(g, e, combo).value;
    const double rhs = 2.0 * malliavin_derivative(g, e, f).value - 0.5 * malliavin_derivative(g, e, triangles).value;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("eigenvector perturbation against finite differences") {
  double worst = 0;
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 20; ++seed) {
    const auto g = sample_configuration_model(100, 3, seed);
    const EigenSystem es = full_eigensystem(normalize_adjacency(g));
    if (es.gap_flags[1]) continue;
    const Edge e = g.edges()[seed % g.edges().size()];
    const Eigen::VectorXd analytic = eigvec_perturbation(g, e.u, e.v);
    worst = std::max(worst, (analytic - finite_difference(g, e.u, e.v, 1e-6)).cwiseAbs().maxCoeff());

    CHECK(std::abs(analytic.dot(es.vectors.col(1))) <= 1e-10);
    CHECK(eigvec_perturbation(g, e.v, e.u) == analytic);
    ++checked;
  }
  MESSAGE("max coordinate error " << worst);
  CHECK(worst <= 1e-4);
}

TEST_CASE("the displayed alternative formula is available for comparison") {
  const auto g = sample_configuration_model(100, 3, 2);
  const Edge e = g.edges()[0];
  const Eigen::VectorXd alt = eigvec_perturbation(g, e.u, e.v, PerturbationFormula::alternative);
  CHECK(alt.size() == 100);
  // it does not reproduce the finite-difference derivative
  CHECK((alt - finite_difference(g, e.u, e.v, 1e-6)).cwiseAbs().maxCoeff() > 1e-4);
  CHECK(throws_kind(ErrorKind::DegenerateEigenvalue, [] { eigvec_perturbation(cycle6(), 0, 1); }));
}

TEST_CASE("overlap derivative energy") {
  const auto g = sample_configuration_model(60, 3, 3);
  const auto q = build_direction(DirectionKind::random_orthogonal, 60, {}, 3);
  const auto all = overlap_derivative_energy(g, q, 1000, 1, 4);
  CHECK(all.per_edge.size() == 90);
  CHECK(all.checks.size() == 90);
  CHECK(all.energy > 0);
  int within = 0;
  for (const auto& c : all.checks) within += c.relative_deviation <= 0.1;
  MESSAGE(within << "/90 edges within 10%, max relative deviation " << all.max_relative_deviation);
  WARN(all.max_relative_deviation <= 0.1);

  // the perturbative value is the exact linearization: scale each switch's
  // entry changes by eps and difference the overlap of the dense eigenvector
  const Eigen::MatrixXd h = normalize_adjacency(g).to_dense();
  const Eigen::VectorXd u2 = second_vector(h, Eigen::VectorXd::Ones(60));
  const double eps = 1e-6;
  for (std::size_t k = 0; k < 5; ++k) {
    const Edge e = g.edges()[k];
    double linear = 0;
    for (const auto& sw : list_switchable_pairs(g, e)) {
      const Eigen::MatrixXd step = normalize_adjacency(apply_switching(g, sw)).to_dense() - h;
      const Eigen::VectorXd plus = second_vector(h + eps * step, u2);
      const Eigen::VectorXd minus = second_vector(h - eps * step, u2);
      linear += std::sqrt(60.0) * q.coords.dot(plus - minus) / (2 * eps);
    }
    // up to the overall sign convention of u2
    CHECK(std::abs(std::abs(all.per_edge[k].value) - std::abs(linear)) <= 1e-6 * (1 + std::abs(linear)));
  }

  // the subset check is reproducible and worker-count invariant
  const auto a = overlap_derivative_energy(g, q, 20, 9, 1);
  const auto b = overlap_derivative_energy(g, q, 20, 9, 3);
  CHECK(a.checks.size() == 20);
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(a.checks[k].edge == b.checks[k].edge);
    CHECK(a.checks[k].exact == b.checks[k].exact);
  }
  CHECK(a.energy == all.energy);
}

TEST_CASE("variance decomposition") {
  const auto injected = variance_decomposition_check(1000, 4, 2000, {}, 5, 1, normal_stream_hook());
  CHECK(std::abs(injected.reconstructed - injected.variance) <= 1e-12);
  CHECK(injected.ci_kappa2.contains(0.0));
  CHECK(std::abs(injected.normalized_kappa2) <= 1e-12);
  CHECK(injected.bound == kVarianceBoundC / 4);

  const auto real = variance_decomposition_check(200, 3, 500, {}, 6, 4);
  CHECK(std::abs(real.reconstructed - real.variance) <= 1e-12);
  CHECK(std::abs(real.normalized_kappa2) <= 1e-12);
  CHECK(real.ci_abs_deviation.lo <= real.ci_abs_deviation.hi);
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] { variance_decomposition_check(200, 3, 100, {}, 1); }));
}

TEST_CASE("derivative CSV") {
  const auto r = malliavin_derivative(cycle6(), {0, 1}, edge_indicator({0, 1}));
  CHECK(derivative_csv(6, 2, {r}, "exact-recompute") ==
        "n,d,edge_i,edge_j,functional,derivative,switch_count,mode\n6,2,0,1,edge(0,1),-4,4,exact-recompute\n");
}

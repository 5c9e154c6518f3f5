#include <cmath>

#include "doctest.h"
#include "rrglab/eigensolvers.hpp"
#include "rrglab/error.hpp"
#include "rrglab/interpolate.hpp"
#include "rrglab/locallaw.hpp"
#include "rrglab/rng.hpp"

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

std::vector<double> uniform_grid(int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(static_cast<double>(i) / (count - 1));
  return g;
}

}  // namespace

TEST_CASE("GOE evolution endpoints") {
  const int n = 60, d = 3;
  const auto h0 = normalize_adjacency(sample_configuration_model(n, d, 1));
  CHECK(goe_evolved(h0, 0.0, 5).to_dense() == h0.to_dense());

  const auto w = goe_evolved(h0, 1.0, 5);
  CHECK(w.to_dense() == sample_constrained_goe(n, 5).to_dense());
  CHECK((w * Eigen::VectorXd::Ones(n)).norm() <= 1e-12);

  const auto a = goe_evolved(h0, 0.25, 9);
  CHECK(a.to_dense() == goe_evolved(h0, 0.25, 9).to_dense());
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(n);
  CHECK((a * e - std::sqrt(0.75) * std::sqrt(3.0) * e).norm() <= 1e-10);
  CHECK(a.to_dense() == a.to_dense().transpose());

  CHECK(throws_kind(ErrorKind::TimeOutOfRange, [&] { goe_evolved(h0, -0.1, 1); }));
  CHECK(throws_kind(ErrorKind::TimeOutOfRange, [&] { goe_evolved(h0, 1.5, 1); }));
}

TEST_CASE("interpolated matrix") {
  const int n = 40;
  const auto h0 = normalize_adjacency(sample_configuration_model(n, 4, 2));
  const auto ht = goe_evolved(h0, 0.3, 3);
  CHECK(interpolated_matrix(h0, ht, 0.0).to_dense() == h0.to_dense());
  CHECK(interpolated_matrix(h0, ht, 1.0).to_dense() == ht.to_dense());
  CHECK(interpolated_matrix(h0, h0, 0.5).to_dense() == h0.to_dense());
  for (double s : {0.1, 0.37, 0.9}) {
    const Eigen::MatrixXd m = interpolated_matrix(h0, ht, s).to_dense();
    const Eigen::MatrixXd expected = (1 - s) * h0.to_dense() + s * ht.to_dense();
    CHECK((m - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(m == m.transpose());
  }
  CHECK(throws_kind(ErrorKind::CouplingOutOfRange, [&] { interpolated_matrix(h0, ht, 1.01); }));
}

TEST_CASE("optimal coupling parameter") {
  CHECK(std::abs(optimal_s(4, 0.01, 400) - 0.01) <= 1e-15);
  CHECK(optimal_s(500, 1, 500) == 1.0);
  CHECK(optimal_s(3, 0, 100) == 0.0);
  CHECK(optimal_s(4, 0.02, 400) > optimal_s(4, 0.01, 400));
  CHECK(optimal_s(8, 0.01, 400) > optimal_s(4, 0.01, 400));
  CHECK(optimal_s(4, 0.01, 800) < optimal_s(4, 0.01, 400));
}

TEST_CASE("operator norm against the dense spectrum") {
  Rng rng = make_rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto h0 = normalize_adjacency(sample_configuration_model(200, 3 + 2 * static_cast<int>(i % 3), i));
    const double t = unif(rng);
    const Eigen::MatrixXd delta = goe_evolved(h0, t, i).to_dense() - h0.to_dense();
    Eigen::VectorXd values;
    symmetric_eigen(delta, values, nullptr);
    CHECK(std::abs(operator_norm(SymMatrix::dense(delta)) - values.cwiseAbs().maxCoeff()) <= 1e-6);
  }
}

TEST_CASE("Delta_t norms") {
  const auto zero = delta_norm_stats(100, 3, {0.0}, 30, 1);
  CHECK(zero.rows[0].mean_sq == 0.0);
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] { delta_norm_stats(100, 3, {0.1}, 10, 1); }));

  const auto stats = delta_norm_stats(1000, 4, {0.001, 0.01, 0.1}, 100, 2024);
  for (const auto& row : stats.rows) MESSAGE("t = " << row.t << " mean |Delta|^2 = " << row.mean_sq);
  CHECK(stats.rows[1].mean_sq > stats.rows[0].mean_sq);
  CHECK(stats.rows[2].mean_sq > stats.rows[1].mean_sq);
  CHECK(stats.fit_coefficient > 0);
  CHECK(stats.oracle_deviation >= 0);
  CHECK(stats.oracle_deviation <= 1e-6);
}

TEST_CASE("coupling profile consistency") {
  const int n = 300;
  const auto g = sample_configuration_model(n, 4, 6);
  const auto q = build_direction(DirectionKind::random_orthogonal, n, {}, 6);
  const ComplexEnergy z{2.0, std::pow(n, -0.5)};

  const auto only_zero = coupling_error_profile(g, 0.1, z, q, {0.0}, 3);
  CHECK(std::abs(only_zero.points[0].err - local_law_error(g, z, q, 3).err) <= 1e-9);

  const auto dup = coupling_error_profile(g, 0.1, z, q, {0.2, 0.5, 0.2, 0.5}, 3);
  CHECK(dup.points[0].err == dup.points[2].err);
  CHECK(dup.points[1].err == dup.points[3].err);

  const auto profile = coupling_error_profile(g, 0.1, z, q, uniform_grid(21), 3);
  CHECK(profile.points.size() == 21);
  for (const auto& p : profile.points) CHECK(p.err >= 0);
  CHECK(profile.points[profile.argmin].err <= profile.points[0].err);
  CHECK(profile.continuous);

  // one GOE realization per grid point in fresh mode; s = 0 is unaffected
  const auto fresh = coupling_error_profile(g, 0.1, z, q, {0.0, 0.5}, 3, true);
  CHECK(std::abs(fresh.points[0].err - profile.points[0].err) <= 1e-9);

  CHECK(throws_kind(ErrorKind::CouplingOutOfRange, [&] { coupling_error_profile(g, 0.1, z, q, {1.2}, 3); }));
}

TEST_CASE("profile ensemble is worker-count invariant") {
  const auto a = coupling_profile_ensemble(200, 4, 0.1, {2.0, 0.07}, uniform_grid(6), 4, 10, 1);
  const auto b = coupling_profile_ensemble(200, 4, 0.1, {2.0, 0.07}, uniform_grid(6), 4, 10, 3);
  CHECK(profile_csv(a.profiles) == profile_csv(b.profiles));
  CHECK(a.optimal == optimal_s(4, 0.1, 200));
  const auto grid = log_s_grid(21);
  CHECK(grid.size() == 21);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(std::abs(grid[1] - 1e-3) <= 1e-15);
}

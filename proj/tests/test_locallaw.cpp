#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rrglab/error.hpp"
#include "rrglab/locallaw.hpp"
#include "rrglab/rng.hpp"

using namespace rrg;
using cd = std::complex<double>;

namespace {

RegularGraph cycle6() { return RegularGraph(6, 2, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}); }
RegularGraph k4() { return RegularGraph(4, 3, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }

Direction unit(Eigen::VectorXd v) {
  Direction q;
  q.n = static_cast<int>(v.size());
  q.coords = v.normalized();
  return q;
}

template <class Fn>
bool throws_kind(ErrorKind kind, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("quadratic form of the zero matrix") {
  const auto h = SymMatrix::zero(5);
  Eigen::VectorXd v(5);
  v << 1, 2, -1, 0, 3;
  const auto q = unit(v);
  const ComplexEnergy z{0.0, 1.0};
  CHECK(std::abs(resolvent_quadratic_form(h, z, q) - cd(0, 1)) <= 1e-14);
  CHECK(std::abs(resolvent_quadratic_form(h, z, q, ResolventPath::eigen_expansion) - cd(0, 1)) <= 1e-14);
}

TEST_CASE("quadratic form on the 6-cycle against the circulant spectrum") {
  const auto h = normalize_adjacency(cycle6());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(6);
  v[0] = 1;
  v[1] = -1;
  const auto q = unit(v);
  const ComplexEnergy z{2.0, 0.5};

  // Fourier modes f_k(j) = exp(2 pi i jk/6)/sqrt(6), eigenvalue sqrt(2) cos(2 pi k / 6)
  cd oracle = 0;
  for (int k = 0; k < 6; ++k) {
    cd overlap = 0;
    for (int j = 0; j < 6; ++j) overlap += std::polar(1.0 / std::sqrt(6.0), -2 * std::numbers::pi * j * k / 6) * q.coords[j];
    oracle += std::norm(overlap) / (std::sqrt(2.0) * std::cos(2 * std::numbers::pi * k / 6) - z.z());
  }
  CHECK(std::abs(resolvent_quadratic_form(h, z, q) - oracle) <= 1e-10);
  CHECK(std::abs(resolvent_quadratic_form(h, z, q, ResolventPath::eigen_expansion) - oracle) <= 1e-10);
}

TEST_CASE("solve path and eigen-expansion path agree") {
  for (auto [n, d] : {std::pair{120, 3}, {300, 5}, {200, 10}}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto g = sample_configuration_model(n, d, seed);
      const auto q = build_direction(DirectionKind::random_orthogonal, n, {}, seed + 100);
      const ComplexEnergy z{2.0, std::pow(n, -2.0 / 3.0)};
      const auto a = local_law_error(g, z, q, seed);
      const auto b = local_law_error(g, z, q, seed, ResolventPath::eigen_expansion);
      CHECK(std::abs(a.gq - b.gq) <= 1e-8);
      CHECK(std::abs(a.err - b.err) <= 1e-8);
      CHECK(a.solve_residual <= 1e-10);
      CHECK(b.solve_residual <= 1e-10);
      CHECK(a.gq.imag() > 0);
    }
  }
}

TEST_CASE("local law error rejects directions with an e component") {
  const auto g = sample_configuration_model(50, 3, 1);
  Direction q = unit(Eigen::VectorXd::Ones(50));
  CHECK(throws_kind(ErrorKind::DirectionNotOrthogonal, [&] { local_law_error(g, {2.0, 0.1}, q, 1); }));
  CHECK(throws_kind(ErrorKind::InvalidArgument,
                    [&] { resolvent_quadratic_form(normalize_adjacency(g), {2.0, 0.0}, q); }));
}

TEST_CASE("Stieltjes positivity and resolvent identity on random triples") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> energy(-2.5, 2.5), logeta(-3.0, 0.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int n = 100 + 20 * static_cast<int>(seed);
    const int d = 3 + 2 * static_cast<int>(seed % 3);
    const auto g = sample_configuration_model(n, d, seed);  // n is even
    const auto q = build_direction(DirectionKind::random_orthogonal, g.n(), {}, seed);
    const ComplexEnergy z{energy(rng), std::pow(10.0, logeta(rng))};
    const auto s = local_law_error(g, z, q, seed);
    CHECK(s.gq.imag() > 0);
    CHECK(s.solve_residual <= 1e-10);
    const auto f = fluctuation_vector(normalize_adjacency(g), z, q);
    CHECK(f.identity_residual <= 1e-10);
  }
}

TEST_CASE("fluctuation vector of the zero matrix") {
  const auto h = SymMatrix::zero(4);
  Eigen::VectorXd v(4);
  v << 1, -1, 2, -2;
  const auto q = unit(v);
  const ComplexEnergy z{0.0, 1.0};
  const auto f = fluctuation_vector(h, z, q);
  const cd m = m_sc(z);
  CHECK((f.F - (-m * cd(0, 1)) * q.coords.cast<cd>()).norm() <= 1e-14);
  CHECK(f.identity_residual <= 1e-14);
}

TEST_CASE("remainder identity and rank-one case") {
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) {
      const ComplexEnergy z{-3.0 + 0.65 * a, std::pow(10.0, -3.0 + 0.4 * b)};
      const cd m = m_sc(z);
      CHECK(std::abs(-1.0 / (z.z() + m) - m) <= 1e-12 * std::max(1.0, std::abs(m)));
    }
  }
  // (1, -1, 0, 0)/sqrt(2) is an eigenvector of K4 / sqrt(3) with eigenvalue -1/sqrt(3)
  Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
  v[0] = 1;
  v[1] = -1;
  const auto q = unit(v);
  const double lambda = -1 / std::sqrt(3.0);
  for (const ComplexEnergy z : {ComplexEnergy{2.0, 0.1}, ComplexEnergy{-0.3, 1.0}, ComplexEnergy{1.0, 0.01}}) {
    const double expected = std::abs(1.0 / (lambda - z.z()) - m_sc(z));
    CHECK(std::abs(vector_remainder_norm(normalize_adjacency(k4()), z, q) - expected) <= 1e-12);
  }
}

// Frozen diagnostic constants for the vector bounds; asymptotic constants
// cannot be read off the text, see the notes in the README.
constexpr double kRemainderC = 20.0;
constexpr double kFluctuationC = 10.0;

TEST_CASE("remainder diagnostic at n = 1000, d = 3") {
  const int n = 1000, d = 3;
  const ComplexEnergy z{2.0, std::pow(n, -0.5)};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = sample_configuration_model(n, d, seed);
    const auto q = build_direction(DirectionKind::random_orthogonal, n, {}, seed);
    const double r = vector_remainder_norm(normalize_adjacency(g), z, q);
    CHECK(r <= kRemainderC * std::sqrt(static_cast<double>(d)) / (n * z.eta));
  }
}

TEST_CASE("fluctuation diagnostic at n = 2000, d = 4") {
  // F = q + (z - m) v exactly, so |F| >= |z - m| |v| - 1; near the edge
  // |z - m| is about 3, which the sqrt(d log n / n) scale cannot absorb.
  const int n = 2000, d = 4;
  const ComplexEnergy z{2.0, std::pow(n, -2.0 / 3.0)};
  const double scale = std::sqrt(d * std::log(n) / n);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto g = sample_configuration_model(n, d, seed);
    const auto q = build_direction(DirectionKind::random_orthogonal, n, {}, seed);
    const auto s = local_law_error(g, z, q, seed);
    const double lower = std::abs(z.z() - m_sc(z)) * s.v_norm - 1.0;
    CHECK(s.fluct_norm >= lower - 1e-9);
    MESSAGE("|F| / (sqrt(d log n / n) |v|) = " << s.fluct_norm / (scale * s.v_norm));
    WARN_LE(s.fluct_norm, kFluctuationC * scale * s.v_norm);
  }
}

TEST_CASE("median local law error along n") {
  // Recorded, not asserted: at fixed d the Kesten-McKay vs semicircle offset
  // near the edge does not shrink with n (measured 0.101, 0.117, 0.117).
  const int d = 10;
  std::vector<double> medians;
  for (int n : {500, 1000, 2000}) {
    const ComplexEnergy z{2.0, std::pow(n, -0.5)};
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto g = sample_configuration_model(n, d, derive_seed(n, seed));
      const auto q = build_direction(DirectionKind::random_orthogonal, n, {}, derive_seed(seed, 9));
      errs.push_back(local_law_error(g, z, q, seed).err);
    }
    medians.push_back(median(errs));
    MESSAGE("n = " << n << " median err = " << medians.back());
  }
  WARN(medians[1] < medians[0]);
  WARN(medians[2] < medians[1]);
  CHECK(medians[2] < 0.2);
}

TEST_CASE("batched shifted solves match single solves") {
  const auto g = sample_configuration_model(300, 4, 3);
  const auto h = normalize_adjacency(g);
  const auto q = build_direction(DirectionKind::random_orthogonal, 300, {}, 1);
  Eigen::VectorXcd shifts(3);
  shifts << cd(2.0, 0.05), cd(0.5, 0.2), cd(-1.0, 0.01);
  Eigen::MatrixXcd b = q.coords.cast<cd>().replicate(1, 3);
  BlockApply apply = [&](const Eigen::MatrixXcd& x, Eigen::MatrixXcd& y) {
    y.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::VectorXd re(300), im(300);
      h.apply(x.col(j).real(), re);
      h.apply(x.col(j).imag(), im);
      y.col(j) = re.cast<cd>() + cd(0, 1) * im.cast<cd>();
    }
  };
  const auto batch = solve_shifted(apply, shifts, b, 1e-11, 6000);
  for (int j = 0; j < 3; ++j) {
    const auto single = solve_shifted(h, shifts[j], b.col(j));
    CHECK((batch.x.col(j) - single.x.col(0)).norm() <= 1e-9);
    CHECK(batch.residuals[j] <= 1e-10);
  }
  CHECK(throws_kind(ErrorKind::SolveFailure, [&] { solve_shifted(apply, shifts, b, 1e-11, 5); }));
}

TEST_CASE("variance scan validation and determinism") {
  CHECK(throws_kind(ErrorKind::InvalidArgument,
                    [] { ensemble_variance_scan({{100, 3, {2.0, 0.1}}}, 1, 1); }));
  const std::vector<ScanCell> grid{{100, 3, {2.0, 0.1}}, {100, 3, {2.0, 0.1}}};
  const auto a = ensemble_variance_scan(grid, 30, 8);
  const auto b = ensemble_variance_scan(grid, 30, 8, 3);
  CHECK(scan_csv(a) == scan_csv(b));
  CHECK(a.rows.size() == 60);
  CHECK(a.cells.size() == 2);
  CHECK(a.cells[0].var_re > 0);
}

TEST_CASE("variance scan along the edge scaling") {
  std::vector<ScanCell> grid;
  for (int n : {250, 500, 1000, 2000}) grid.push_back({n, 3, {2.0, std::pow(n, -0.5)}});
  const auto scan = ensemble_variance_scan(grid, 200, 2024);
  for (std::size_t i = 0; i < scan.cells.size(); ++i)
    MESSAGE("n = " << scan.cells[i].cell.n << " var re = " << scan.cells[i].var_re << " var im = " << scan.cells[i].var_im);
  for (std::size_t i = 1; i < scan.cells.size(); ++i) {
    CHECK(scan.cells[i].var_re < scan.cells[i - 1].var_re);
    CHECK(scan.cells[i].var_im < scan.cells[i - 1].var_im);
  }
  REQUIRE(scan.fits.size() == 2);
  for (const auto& fit : scan.fits) {
    MESSAGE(fit.component << " slope " << fit.slope << " +- " << fit.stderr_slope);
    CHECK(fit.slope < 0);
  }
}

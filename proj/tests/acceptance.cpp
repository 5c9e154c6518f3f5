// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by id (e.g. `acceptance C1 C8`).

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "rrglab/eigensolvers.hpp"
#include "rrglab/harness.hpp"
#include "rrglab/interpolate.hpp"
#include "rrglab/locallaw.hpp"
#include "rrglab/malliavin.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"
#include "rrglab/steinlab.hpp"

using namespace rrg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const int kWorkers = std::max(1u, std::thread::hardware_concurrency());

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------- C1
Outcome sampler_uniformity() {
  Outcome out{true, ""};
  for (auto [n, d] : {std::pair{4, 3}, {6, 2}, {6, 3}}) {
    const oracle::GraphIndex index(oracle::brute_force_regular(n, d));
    std::vector<long> counts(index.size(), 0);
    for (std::uint64_t i = 0; i < 10000; ++i) ++counts[index.at(sample_configuration_model(n, d, derive_seed(101, i)))];
    // a single labeled graph (K4) leaves nothing to test beyond membership
    const double p = counts.size() == 1 ? 1.0 : oracle::chi_square_uniform_p(counts);
    out.pass = out.pass && p > 0.001;
    out.detail += "(" + std::to_string(n) + "," + std::to_string(d) + "): " + std::to_string(counts.size()) +
                  " graphs p=" + fmt(p) + "; ";
  }
  return out;
}

// ---------------------------------------------------------------- C2
Outcome eigen_correctness() {
  Rng rng = make_rng(202);
  std::uniform_int_distribution<int> size(20, 500);
  const int ds[] = {3, 4, 10};
  double residual = 0, ortho = 0, perron = 0, overlap_e = 0;
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    const int d = ds[i % 3];
    int n = size(rng);
    if (n * d % 2) ++n;
    const auto g = sample_configuration_model(n, d, derive_seed(202, i));
    const SymMatrix h = normalize_adjacency(g);
    const EigenSystem es = full_eigensystem(h);
    const Eigen::MatrixXd dense = h.to_dense();
    const Eigen::MatrixXd& u = es.vectors;
    const double r = ((dense * u) - u * es.values.asDiagonal()).colwise().norm().maxCoeff();
    const double o = (u.transpose() * u - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    const double p = std::abs(es.values[0] - std::sqrt(static_cast<double>(d)));
    const double e = std::abs(u.col(1).sum());
    residual = std::max(residual, r);
    ortho = std::max(ortho, o);
    perron = std::max(perron, p);
    overlap_e = std::max(overlap_e, e / std::sqrt(static_cast<double>(n)));
    ok = ok && r <= 1e-10 && o <= 1e-10 && p <= 1e-10 && e <= 1e-8 * std::sqrt(static_cast<double>(n));
  }
  return {ok, "max residual " + fmt(residual) + ", orthonormality " + fmt(ortho) + ", |lambda1 - sqrt d| " +
                  fmt(perron) + ", max |<u2,e>|/sqrt n " + fmt(overlap_e)};
}

// ---------------------------------------------------------------- C3
Outcome resolvent_identities() {
  Rng rng = make_rng(303);
  std::uniform_int_distribution<int> size(100, 1000);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int ds[] = {3, 4, 6, 10};
  double worst_solve = 0, worst_identity = 0, min_im = INFINITY;
  for (int i = 0; i < 100; ++i) {
    const int d = ds[i % 4];
    int n = size(rng);
    if (n * d % 2) ++n;
    const auto g = sample_configuration_model(n, d, derive_seed(303, i));
    const SymMatrix h = normalize_adjacency(g);
    const double eta = std::exp(std::log(std::pow(n, -0.5)) * (1 - unif(rng)));  // log-uniform in [n^-1/2, 1]
    const ComplexEnergy z{-2.5 + 5 * unif(rng), eta};
    const Direction q = build_direction(DirectionKind::random_orthogonal, n, {}, derive_seed(303, 1000 + i));

    const Eigen::VectorXcd b = q.coords.cast<cplx>();
    const Eigen::VectorXcd v = solve_shifted(h, z.z(), b).x.col(0);
    const Eigen::MatrixXcd dense = h.to_dense().cast<cplx>();
    worst_solve = std::max(worst_solve, (dense * v - z.z() * v - b).norm());
    min_im = std::min(min_im, b.dot(v).imag());  // q real, so conj(q)^T v = <q, Gq>

    const cplx m = m_sc(z);
    const Fluctuation f = fluctuation_vector(h, z, q);
    worst_identity = std::max(worst_identity, (f.F - (b + (z.z() - m) * v)).norm());
  }
  double worst_sc = 0;
  for (int a = 0; a < 10; ++a)
    for (int k = 0; k < 10; ++k) {
      const cplx z(-3.0 + 6.0 * a / 9.0, std::pow(10.0, -3.0 + 3.0 * k / 9.0));
      const cplx m = m_sc(z);
      worst_sc = std::max(worst_sc, std::abs(-1.0 / (z + m) - m));
      if (!(m.imag() > 0)) worst_sc = INFINITY;
    }
  const bool ok = worst_solve <= 1e-10 && min_im > 0 && worst_identity <= 1e-10 && worst_sc <= 1e-12;
  return {ok, "max |(H-z)Gq - q| " + fmt(worst_solve) + ", min Im<q,Gq> " + fmt(min_im) + ", fluctuation identity " +
                  fmt(worst_identity) + ", self-consistency " + fmt(worst_sc)};
}

// ---------------------------------------------------------------- C4
Outcome clt_check() {
  EnsembleConfig config{1000, 3, 2000, {DirectionKind::coordinate_difference, {}}, 404, kWorkers, {}};
  const auto r = run_ensemble(config);
  config.hook = normal_stream_hook();
  const auto control = run_ensemble(config);
  const double control_bound = 1.63 / std::sqrt(2000.0);
  const bool ok = r.ks <= 0.05 && r.stats.variance >= 0.7 && r.stats.variance <= 1.3 && control.ks <= control_bound;
  return {ok, "KS " + fmt(r.ks) + " (<= 0.05), variance " + fmt(r.stats.variance) + " in [0.7, 1.3], excluded " +
                  std::to_string(r.excluded) + "; control KS " + fmt(control.ks) + " (<= " + fmt(control_bound) + ")"};
}

// ---------------------------------------------------------------- C5
Outcome scaling_slope() {
  BerryEsseenPlan plan;
  plan.ns = {250, 500, 1000, 2000};
  plan.ds = {3};
  plan.M = 2000;
  plan.base_seed = 505;
  plan.workers = kWorkers;
  const auto report = berry_esseen_experiment(plan);
  std::string ks;
  for (const auto& c : report.cells) ks += std::to_string(c.n) + ":" + fmt(c.ks) + " ";
  if (report.fits.empty()) return {false, "no fit produced; KS " + ks};
  const auto& f = report.fits.front();
  const bool ok = f.fit.slope >= -0.45 && f.fit.slope <= -0.02 && f.ci_slope.hi < 0;
  return {ok, "KS by N " + ks + "; slope " + fmt(f.fit.slope) + " in [-0.45, -0.02], bootstrap 95% CI [" +
                  fmt(f.ci_slope.lo) + ", " + fmt(f.ci_slope.hi) + "] (upper end < 0)"};
}

// ---------------------------------------------------------------- C6
Outcome variance_normalization() {
  std::vector<VarianceDecomposition> rows;
  for (int d : {4, 8, 16}) rows.push_back(variance_decomposition_check(1000, d, 2000, {}, derive_seed(606, d), kWorkers));
  auto overlap = [](const Interval& a, const Interval& b) { return a.lo <= b.hi && b.lo <= a.hi; };
  int violations = 0;
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    detail += "d=" + std::to_string(rows[k].d) + ": |Var-1| " + fmt(rows[k].abs_deviation) + " CI [" +
              fmt(rows[k].ci_abs_deviation.lo) + ", " + fmt(rows[k].ci_abs_deviation.hi) + "]; ";
    if (k > 0 && rows[k].abs_deviation > rows[k - 1].abs_deviation) {
      ++violations;
      ok = ok && overlap(rows[k].ci_abs_deviation, rows[k - 1].ci_abs_deviation);
    }
  }
  ok = ok && violations <= 1;
  return {ok, detail + std::to_string(violations) + " adjacent increase(s)"};
}

// ---------------------------------------------------------------- C7
Outcome interpolation_minimum() {
  const int n = 1000, d = 8;
  const double t = std::pow(n, -1.0 / 3.0);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  const auto ens = coupling_profile_ensemble(n, d, t, {2.0, std::pow(n, -0.5)}, grid, 200, 707, kWorkers);
  const double med = ens.median_argmin_s, opt = ens.optimal;
  int at0 = 0, at1 = 0;
  for (const auto& p : ens.profiles) {
    at0 += p.argmin == 0;
    at1 += p.argmin + 1 == grid.size();
  }
  const bool ok = med > 0 && med < 1 && med <= 5 * opt && med >= opt / 5;
  return {ok, "median argmin s " + fmt(med) + ", sqrt(dt/N) " + fmt(opt) + ", argmin at s=0: " + std::to_string(at0) +
                  ", at s=1: " + std::to_string(at1) + ", discontinuous profiles " + std::to_string(ens.discontinuous)};
}

// ---------------------------------------------------------------- C8
Eigen::VectorXd second_vector(const Eigen::MatrixXd& h, const Eigen::VectorXd& reference) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  Eigen::VectorXd v = solver.eigenvectors().col(h.rows() - 2);
  if (v.dot(reference) < 0) v = -v;
  return v;
}

Outcome malliavin_machinery() {
  const RegularGraph c6(6, 2, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}});
  const auto r = malliavin_derivative(c6, {0, 1}, edge_indicator({0, 1}));
  const bool part1 = r.value == -4.0 && r.switch_count == 4;

  double fd_error = 0;
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 20; ++seed) {
    const auto g = sample_configuration_model(100, 3, derive_seed(808, seed));
    const EigenSystem es = full_eigensystem(normalize_adjacency(g));
    if (es.gap_flags[1]) continue;
    const Edge e = g.edges()[seed % g.edges().size()];
    const Eigen::MatrixXd h = normalize_adjacency(g).to_dense();
    Eigen::VectorXd u2 = second_vector(h, Eigen::VectorXd::Ones(100));
    Eigen::Index at;
    u2.cwiseAbs().maxCoeff(&at);
    if (u2[at] < 0) u2 = -u2;
    const double delta = 1e-6;
    Eigen::MatrixXd bump = Eigen::MatrixXd::Zero(100, 100);
    bump(e.u, e.v) = bump(e.v, e.u) = delta / std::sqrt(3.0);
    const Eigen::VectorXd fd = (second_vector(h + bump, u2) - second_vector(h - bump, u2)) / (2 * delta);
    fd_error = std::max(fd_error, (eigvec_perturbation(g, e.u, e.v) - fd).cwiseAbs().maxCoeff());
    ++checked;
  }
  const bool part2 = fd_error <= 1e-4;

  const auto g = sample_configuration_model(60, 3, 809);
  const auto q = build_direction(DirectionKind::random_orthogonal, 60, {}, 809);
  const auto energy = overlap_derivative_energy(g, q, 1 << 20, 809, kWorkers);
  int within = 0;
  for (const auto& c : energy.checks) within += c.relative_deviation <= 0.1;
  const bool part3 = within == static_cast<int>(energy.checks.size());

  return {part1 && part2 && part3,
          std::string("C6 indicator D_e = ") + fmt(r.value) + " over " + std::to_string(r.switch_count) +
              " switchings [" + (part1 ? "ok" : "fail") + "]; finite differences max error " + fmt(fd_error) +
              " on 20 instances [" + (part2 ? "ok" : "fail") + "]; energy cross-check " + std::to_string(within) + "/" +
              std::to_string(energy.checks.size()) + " edges within 10%, max relative deviation " +
              fmt(energy.max_relative_deviation) + " [" + (part3 ? "ok" : "fail") + "]"};
}

// ---------------------------------------------------------------- C9
std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename() == "manifest.json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[entry.path().filename().string()] = s.str();
  }
  return out;
}

Outcome determinism() {
  const std::vector<std::string> configs{
      "experiment=sample\nN=12,20\nd=3,4\nM=8\nseed=9\n",
      "experiment=spectrum\nN=200\nd=3,4\nM=20\nseed=9\n",
      "experiment=clt\nN=300\nd=3\nM=300\nseed=9\n",
      "experiment=locallaw\nN=100,200,400\nd=3\nM=30\nE=2,0.5\nseed=9\n",
      "experiment=interpolate\nN=200\nd=4\nM=30\nprofiles=4\nseed=9\n",
      "experiment=malliavin\nN=40,60,80\nd=3\nM=6\ncheck_edges=4\nseed=9\n",
      "experiment=scaling\nN=200,300,400\nd=3\nM=500\nbootstrap=100\nkappa4_table=true\nseed=9\n",
  };
  const int other = std::max(kWorkers, 4);
  bool ok = true;
  std::string detail;
  for (const auto& text : configs) {
    std::map<std::string, std::string> outputs[2];
    std::string name;
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = fs::temp_directory_path() / ("rrglab_acceptance_det" + std::to_string(k));
      fs::remove_all(dir);
      auto spec = parse_spec(text, {{"workers", std::to_string(k == 0 ? 1 : other)}, {"output", dir.string()}});
      name = std::string(to_string(spec.experiment));
      run(spec);
      outputs[k] = artifacts(dir);
    }
    const bool same = outputs[0] == outputs[1] && !outputs[0].empty();
    ok = ok && same;
    detail += name + " " + std::to_string(outputs[0].size()) + " files " + (same ? "identical" : "DIFFER") + "; ";
  }
  return {ok, "workers 1 vs " + std::to_string(other) + ": " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>> criteria{
      {"C1", "sampler uniformity", sampler_uniformity},
      {"C2", "eigen correctness", eigen_correctness},
      {"C3", "resolvent identities", resolvent_identities},
      {"C4", "CLT check", clt_check},
      {"C5", "scaling slope", scaling_slope},
      {"C6", "variance normalization", variance_normalization},
      {"C7", "interpolation minimum", interpolation_minimum},
      {"C8", "Malliavin machinery", malliavin_machinery},
      {"C9", "determinism", determinism},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, name, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << name << ": " << o.detail << " [" << fmt(secs, 3) << "s]"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

#include "rrglab/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rrglab/error.hpp"
#include "rrglab/locallaw.hpp"
#include "rrglab/parallel.hpp"
#include "rrglab/rng.hpp"

namespace rrg {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::TimeOutOfRange, "t = " + std::to_string(t) + " outside [0, 1]");
}

void check_coupling(double s) {
  if (!(s >= 0.0 && s <= 1.0)) fail(ErrorKind::CouplingOutOfRange, "s = " + std::to_string(s) + " outside [0, 1]");
}

SymOperator scaled(const SymMatrix& h, double sign) {
  return {h.n(), h.norm_bound(), [h, sign](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            h.apply(x, y);
            y *= sign;
          }};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

SymMatrix goe_evolved(const SymMatrix& h0, double t, std::uint64_t seed) {
  check_time(t);
  if (t == 0.0) return h0;
  const SymMatrix w = sample_constrained_goe(h0.n(), seed);
  if (t == 1.0) return w;
  Eigen::MatrixXd m = std::sqrt(1.0 - t) * h0.to_dense();
  m += std::sqrt(t) * *w.dense_data();
  return SymMatrix::dense(std::move(m));
}

SymMatrix interpolated_matrix(const SymMatrix& h0, const SymMatrix& ht, double s) {
  check_coupling(s);
  if (h0.n() != ht.n()) fail(ErrorKind::InvalidArgument, "interpolation endpoints differ in size");
  if (s == 0.0) return h0;
  if (s == 1.0) return ht;
  Eigen::MatrixXd m = (1.0 - s) * h0.to_dense();
  m += s * ht.to_dense();
  return SymMatrix::dense(std::move(m));
}

double optimal_s(double d, double t, double n) {
  if (!(d > 0) || !(t >= 0) || !(n > 0)) fail(ErrorKind::InvalidArgument, "optimal_s needs d, n > 0 and t >= 0");
  return std::min(1.0, std::sqrt(d * t / n));
}

double operator_norm(const SymMatrix& h, double tol) {
  if (h.n() == 0) return 0.0;
  if (h.n() <= 2) {
    Eigen::VectorXd values;
    symmetric_eigen(h.to_dense(), values, nullptr);
    return values.cwiseAbs().maxCoeff();
  }
  LanczosOptions options;
  options.seed = 0x5eed;
  const double top = topk_eigenpairs(scaled(h, 1.0), 1, tol, options, 0.0).values[0];
  const double bottom = topk_eigenpairs(scaled(h, -1.0), 1, tol, options, 0.0).values[0];
  return std::max(std::abs(top), std::abs(bottom));
}

DeltaNormStats delta_norm_stats(int n, int d, const std::vector<double>& t_grid, int samples,
                                std::uint64_t base_seed, int workers) {
  if (samples < 30) fail(ErrorKind::InvalidArgument, "delta norm statistics need at least 30 samples");
  if (t_grid.empty()) fail(ErrorKind::InvalidArgument, "empty t grid");
  for (double t : t_grid) check_time(t);

  DeltaNormStats out;
  out.n = n;
  out.d = d;
  const bool check = n <= dense_limit();
  const std::size_t per = static_cast<std::size_t>(samples);
  std::vector<double> norms(t_grid.size() * per);
  std::vector<double> deviations(t_grid.size(), -1.0);

  parallel_for(norms.size(), workers, [&](std::size_t task) {
    const std::size_t k = task / per;
    const std::size_t i = task % per;
    const double t = t_grid[k];
    if (t == 0.0) {
      norms[task] = 0.0;  // Delta_0 = 0 exactly
      return;
    }
    const std::uint64_t seed = derive_seed(derive_seed(base_seed, k), i);
    const SymMatrix h0 = normalize_adjacency(sample_configuration_model(n, d, derive_seed(seed, stream::graph)));
    const SymMatrix ht = goe_evolved(h0, t, derive_seed(seed, stream::goe));
    Eigen::MatrixXd delta = ht.to_dense();
    delta -= h0.to_dense();
    const SymMatrix dm = SymMatrix::dense(std::move(delta));
    const double norm = operator_norm(dm);
    norms[task] = norm * norm;
    if (check && i == 0) {
      Eigen::VectorXd values;
      symmetric_eigen(*dm.dense_data(), values, nullptr);
      deviations[k] = std::abs(values.cwiseAbs().maxCoeff() - norm);
    }
  });

  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    DeltaNormRow row;
    row.t = t_grid[k];
    row.samples = samples;
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < per; ++i) {
      sum += norms[k * per + i];
      sum2 += norms[k * per + i] * norms[k * per + i];
    }
    row.mean_sq = sum / samples;
    const double var = std::max(0.0, (sum2 - samples * row.mean_sq * row.mean_sq) / (samples - 1));
    const double se = std::sqrt(var / samples);
    row.ci = {row.mean_sq - 1.96 * se, row.mean_sq + 1.96 * se};
    row.predictor = d * row.t + static_cast<double>(d) * d / n;
    sxy += row.predictor * row.mean_sq;
    sxx += row.predictor * row.predictor;
    out.rows.push_back(row);
    out.oracle_deviation = std::max(out.oracle_deviation, deviations[k]);
  }
  out.fit_coefficient = sxy / sxx;
  double ssr = 0;
  for (const auto& row : out.rows) ssr += std::pow(row.mean_sq - out.fit_coefficient * row.predictor, 2);
  const double dof = static_cast<double>(out.rows.size()) - 1;
  out.fit_stderr = dof > 0 ? std::sqrt(ssr / dof / sxx) : 0.0;
  return out;
}

CouplingProfile coupling_error_profile(const RegularGraph& g, double t, const ComplexEnergy& z, const Direction& q,
                                       const std::vector<double>& s_grid, std::uint64_t seed,
                                       bool fresh_realizations) {
  check_time(t);
  if (s_grid.empty()) fail(ErrorKind::InvalidArgument, "empty s grid");
  for (double s : s_grid) check_coupling(s);
  if (!(z.eta > 0)) fail(ErrorKind::InvalidArgument, "coupling profile needs eta > 0");
  if (q.n != g.n()) fail(ErrorKind::InvalidArgument, "direction dimension does not match the graph");

  const int n = g.n();
  const SymMatrix h0 = normalize_adjacency(g);
  const cplx m = m_sc(z);
  const Eigen::VectorXcd qc = q.coords.cast<cplx>();

  // H_{t,s} = a_s H0 + b_s W with a_s = 1 - s + s sqrt(1 - t), b_s = s sqrt(t)
  auto solve_group = [&](const std::vector<double>& svals, const Eigen::MatrixXd* w) {
    const auto k = static_cast<Eigen::Index>(svals.size());
    Eigen::VectorXd a(k), b(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      a[j] = 1.0 - svals[j] + svals[j] * std::sqrt(1.0 - t);
      b[j] = svals[j] * std::sqrt(t);
    }
    BlockApply apply = [&](const Eigen::MatrixXcd& x, Eigen::MatrixXcd& y) {
      Eigen::MatrixXd parts(n, 2 * k), hx(n, 2 * k);
      parts.leftCols(k) = x.real();
      parts.rightCols(k) = x.imag();
      h0.apply_block(parts, hx);
      Eigen::VectorXd a2(2 * k), b2(2 * k);
      a2 << a, a;
      b2 << b, b;
      hx = hx * a2.asDiagonal();
      if (w && b.cwiseAbs().maxCoeff() > 0) hx.noalias() += (*w * parts) * b2.asDiagonal();
      y = hx.leftCols(k).cast<cplx>() + cplx(0, 1) * hx.rightCols(k).cast<cplx>();
    };
    const Eigen::VectorXcd shifts = Eigen::VectorXcd::Constant(k, z.z());
    const Eigen::MatrixXcd rhs = qc.replicate(1, k);
    const auto solve = solve_shifted(apply, shifts, rhs, 1e-11, 20L * std::max(n, 50));
    if (solve.residuals.maxCoeff() > 1e-10)
      fail(ErrorKind::SolveFailure, "coupling solve residual " + std::to_string(solve.residuals.maxCoeff()));
    std::vector<cplx> gq(svals.size());
    for (Eigen::Index j = 0; j < k; ++j) gq[j] = (qc.array() * solve.x.col(j).array()).sum();
    return gq;
  };

  CouplingProfile out;
  out.n = n;
  out.d = g.d();
  out.t = t;
  out.z = z;
  out.seed = seed;
  out.points.resize(s_grid.size());

  if (!fresh_realizations) {
    // duplicated s values share one solve
    std::map<double, std::size_t> unique;
    std::vector<double> svals;
    for (double s : s_grid)
      if (unique.emplace(s, svals.size()).second) svals.push_back(s);
    const bool need_w = t > 0 && std::any_of(svals.begin(), svals.end(), [](double s) { return s > 0; });
    SymMatrix w;
    if (need_w) w = sample_constrained_goe(n, derive_seed(seed, stream::goe));
    const auto gq = solve_group(svals, need_w ? w.dense_data() : nullptr);
    for (std::size_t i = 0; i < s_grid.size(); ++i) out.points[i] = {s_grid[i], gq[unique[s_grid[i]]], 0.0};
  } else {
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
      const SymMatrix w = sample_constrained_goe(n, derive_seed(derive_seed(seed, stream::goe), i));
      out.points[i] = {s_grid[i], solve_group({s_grid[i]}, w.dense_data())[0], 0.0};
    }
  }

  for (auto& p : out.points) p.err = std::abs(p.gq - m);
  for (std::size_t i = 1; i < out.points.size(); ++i)
    if (out.points[i].err < out.points[out.argmin].err) out.argmin = i;
  if (out.points.size() >= 2) {
    std::vector<double> jumps;
    for (std::size_t i = 1; i < out.points.size(); ++i)
      jumps.push_back(std::abs(out.points[i].err - out.points[i - 1].err));
    out.max_jump = *std::max_element(jumps.begin(), jumps.end());
    out.median_jump = median_of(jumps);
    out.continuous = out.max_jump <= 10.0 * out.median_jump;
  }
  return out;
}

std::vector<double> log_s_grid(int count, double lo) {
  if (count < 2 || !(lo > 0 && lo < 1)) fail(ErrorKind::InvalidArgument, "log grid needs count >= 2 and 0 < lo < 1");
  std::vector<double> grid{0.0};
  if (count == 2) {
    grid.push_back(1.0);
    return grid;
  }
  for (int i = 0; i < count - 1; ++i) grid.push_back(std::pow(lo, 1.0 - static_cast<double>(i) / (count - 2)));
  grid.back() = 1.0;
  return grid;
}

ProfileEnsemble coupling_profile_ensemble(int n, int d, double t, const ComplexEnergy& z,
                                          const std::vector<double>& s_grid, int count, std::uint64_t base_seed,
                                          int workers) {
  if (count < 1) fail(ErrorKind::InvalidArgument, "profile ensemble needs at least one profile");
  ProfileEnsemble out;
  out.profiles.resize(static_cast<std::size_t>(count));
  parallel_for(out.profiles.size(), workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(base_seed, i);
    const auto g = sample_configuration_model(n, d, derive_seed(seed, stream::graph));
    const auto q = build_direction(DirectionKind::random_orthogonal, n, {}, derive_seed(seed, stream::direction));
    out.profiles[i] = coupling_error_profile(g, t, z, q, s_grid, seed);
  });
  std::vector<double> argmins;
  for (const auto& p : out.profiles) {
    argmins.push_back(p.points[p.argmin].s);
    out.discontinuous += !p.continuous;
  }
  out.median_argmin_s = median_of(argmins);
  out.optimal = optimal_s(d, t, n);
  return out;
}

std::string profile_csv(const std::vector<CouplingProfile>& profiles) {
  std::ostringstream out;
  out.precision(17);
  out << "n,d,t,s,E,eta,err,argmin_flag,seed\n";
  for (const auto& p : profiles)
    for (std::size_t i = 0; i < p.points.size(); ++i)
      out << p.n << ',' << p.d << ',' << p.t << ',' << p.points[i].s << ',' << p.z.E << ',' << p.z.eta << ','
          << p.points[i].err << ',' << (i == p.argmin ? 1 : 0) << ',' << p.seed << '\n';
  return out.str();
}

}  // namespace rrg

#include "rrglab/locallaw.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rrglab/error.hpp"
#include "rrglab/parallel.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/steinlab.hpp"

namespace rrg {

namespace {

cplx bilinear(const Eigen::Ref<const Eigen::VectorXcd>& a, const Eigen::Ref<const Eigen::VectorXcd>& b) {
  return (a.array() * b.array()).sum();
}

BlockApply real_block_apply(const SymMatrix& h) {
  return [h](const Eigen::MatrixXcd& x, Eigen::MatrixXcd& y) {
    const Eigen::Index k = x.cols();
    Eigen::MatrixXd parts(x.rows(), 2 * k);
    parts.leftCols(k) = x.real();
    parts.rightCols(k) = x.imag();
    Eigen::MatrixXd out(x.rows(), 2 * k);
    h.apply_block(parts, out);
    y = out.leftCols(k).cast<cplx>() + cplx(0, 1) * out.rightCols(k).cast<cplx>();
  };
}

Eigen::VectorXcd apply_complex(const SymMatrix& h, const Eigen::VectorXcd& v) {
  Eigen::VectorXd re(h.n()), im(h.n());
  h.apply(v.real(), re);
  h.apply(v.imag(), im);
  return re.cast<cplx>() + cplx(0, 1) * im.cast<cplx>();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
  return m;
}

double variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1);
}

// v = G(z) q by one solve, checked against the resolvent identity.
Eigen::VectorXcd resolvent_vector(const SymMatrix& h, const ComplexEnergy& z, const Eigen::VectorXd& q,
                                  double* residual = nullptr) {
  if (!(z.eta > 0)) fail(ErrorKind::InvalidArgument, "resolvent needs eta > 0");
  if (q.size() != h.n()) fail(ErrorKind::InvalidArgument, "direction dimension mismatch");
  const auto solve = solve_shifted(h, z.z(), q.cast<cplx>());
  if (residual) *residual = solve.residuals[0];
  return solve.x.col(0);
}

}  // namespace

ShiftedSolve solve_shifted(const BlockApply& apply, const Eigen::VectorXcd& shifts,
                           const Eigen::MatrixXcd& b, double tol, long max_matvecs) {
  const Eigen::Index n = b.rows();
  const Eigen::Index k = b.cols();
  if (shifts.size() != k) fail(ErrorKind::InvalidArgument, "one shift per right-hand side");

  ShiftedSolve out;
  out.x = Eigen::MatrixXcd::Zero(n, k);
  Eigen::VectorXd target(k);
  for (Eigen::Index j = 0; j < k; ++j) target[j] = tol * std::max(1.0, b.col(j).norm());

  Eigen::MatrixXcd r = b, p, w(n, k);
  auto residual_of = [&](const Eigen::MatrixXcd& x) {
    apply(x, w);
    ++out.matvecs;
    Eigen::MatrixXcd res = b - w + x * shifts.asDiagonal();
    return res;
  };

  while (true) {
    // true residual at the start of each cycle (residual replacement)
    if (out.matvecs > 0) r = residual_of(out.x);
    std::vector<bool> active(static_cast<std::size_t>(k));
    bool any = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      active[j] = r.col(j).norm() > target[j];
      any = any || active[j];
    }
    if (!any) break;
    if (out.matvecs >= max_matvecs)
      fail(ErrorKind::SolveFailure, "shifted solve exceeded " + std::to_string(max_matvecs) + " applications");

    p = r;
    Eigen::VectorXcd rho(k);
    for (Eigen::Index j = 0; j < k; ++j) rho[j] = bilinear(r.col(j), r.col(j));

    bool cycle_done = false;
    while (!cycle_done && out.matvecs < max_matvecs) {
      apply(p, w);
      ++out.matvecs;
      w -= p * shifts.asDiagonal();
      cycle_done = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (!active[j]) continue;
        const cplx sigma = bilinear(p.col(j), w.col(j));
        const double rn = r.col(j).norm();
        // near-breakdown of the bilinear form: leave it to the restart
        if (std::abs(sigma) <= 1e-14 * p.col(j).squaredNorm() || std::abs(rho[j]) <= 1e-14 * rn * rn) {
          active[j] = false;
          continue;
        }
        const cplx alpha = rho[j] / sigma;
        out.x.col(j) += alpha * p.col(j);
        r.col(j) -= alpha * w.col(j);
        // iterate a little past the target so the true residual clears it
        if (r.col(j).norm() <= 0.1 * target[j]) {
          active[j] = false;
          continue;
        }
        const cplx rho_next = bilinear(r.col(j), r.col(j));
        p.col(j) = r.col(j) + (rho_next / rho[j]) * p.col(j);
        rho[j] = rho_next;
        cycle_done = false;
      }
    }
  }
  out.residuals.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) out.residuals[j] = r.col(j).norm();
  return out;
}

ShiftedSolve solve_shifted(const SymMatrix& h, cplx z, const Eigen::VectorXcd& b, double tol) {
  Eigen::VectorXcd shifts(1);
  shifts[0] = z;
  return solve_shifted(real_block_apply(h), shifts, b, tol, 20L * std::max(h.n(), 50));
}

cplx resolvent_quadratic_form(const EigenSystem& es, const ComplexEnergy& z, const Eigen::VectorXd& q) {
  if (!(z.eta > 0)) fail(ErrorKind::InvalidArgument, "resolvent needs eta > 0");
  const Eigen::VectorXd w = es.vectors.transpose() * q;
  cplx sum = 0;
  for (int i = 0; i < es.size(); ++i) sum += w[i] * w[i] / (es.values[i] - z.z());
  return sum;
}

cplx resolvent_quadratic_form(const SymMatrix& h, const ComplexEnergy& z, const Direction& q,
                              ResolventPath path) {
  if (std::abs(q.coords.norm() - 1.0) > 1e-10) fail(ErrorKind::InvalidArgument, "direction is not a unit vector");
  if (path == ResolventPath::eigen_expansion) return resolvent_quadratic_form(full_eigensystem(h), z, q.coords);
  double residual = 0;
  const Eigen::VectorXcd v = resolvent_vector(h, z, q.coords, &residual);
  if (residual > 1e-10) fail(ErrorKind::SolveFailure, "resolvent residual " + std::to_string(residual));
  return bilinear(q.coords.cast<cplx>(), v);
}

LocalLawSample local_law_error(const RegularGraph& g, const ComplexEnergy& z, const Direction& q,
                               std::uint64_t seed, ResolventPath path) {
  require_orthogonal(q);
  const SymMatrix h = normalize_adjacency(g);
  const cplx m = m_sc(z);

  LocalLawSample s;
  s.n = g.n();
  s.d = g.d();
  s.z = z;
  s.q_id = q.id();
  s.seed = seed;

  Eigen::VectorXcd v;
  if (path == ResolventPath::eigen_expansion) {
    const EigenSystem es = full_eigensystem(h);
    const Eigen::VectorXd w = es.vectors.transpose() * q.coords;
    Eigen::VectorXcd coeff(es.size());
    for (int i = 0; i < es.size(); ++i) coeff[i] = w[i] / (es.values[i] - z.z());
    v = es.vectors.cast<cplx>() * coeff;
    const Eigen::VectorXcd hv = apply_complex(h, v);
    s.solve_residual = (hv - z.z() * v - q.coords.cast<cplx>()).norm();
  } else {
    v = resolvent_vector(h, z, q.coords, &s.solve_residual);
  }
  const Eigen::VectorXcd qc = q.coords.cast<cplx>();
  s.gq = bilinear(qc, v);
  s.err = std::abs(s.gq - m);
  s.remainder_norm = (v - m * qc).norm();
  // (H - m) v = q + (z - m) v exactly; the identity itself is checked by fluctuation_vector
  s.fluct_norm = (qc + (z.z() - m) * v).norm();
  s.v_norm = v.norm();
  return s;
}

Fluctuation fluctuation_vector(const SymMatrix& h, const ComplexEnergy& z, const Direction& q) {
  const cplx m = m_sc(z);
  const Eigen::VectorXcd v = resolvent_vector(h, z, q.coords);
  const Eigen::VectorXcd hv = apply_complex(h, v);
  Fluctuation f;
  f.F = hv - m * v;
  f.identity_residual = (f.F - (q.coords.cast<cplx>() + (z.z() - m) * v)).norm();
  return f;
}

double vector_remainder_norm(const SymMatrix& h, const ComplexEnergy& z, const Direction& q) {
  const cplx m = m_sc(z);
  const Eigen::VectorXcd v = resolvent_vector(h, z, q.coords);
  return (v - m * q.coords.cast<cplx>()).norm();
}

VarianceScan ensemble_variance_scan(const std::vector<ScanCell>& grid, int samples, std::uint64_t base_seed,
                                    int workers) {
  if (grid.empty()) fail(ErrorKind::InvalidArgument, "variance scan grid is empty");
  if (samples < 30) fail(ErrorKind::InvalidArgument, "variance scan needs at least 30 samples per cell");
  for (const auto& c : grid) {
    if (static_cast<long>(c.n) * c.d % 2 != 0 || c.d >= c.n || c.d < 1)
      fail(ErrorKind::InfeasibleDegree, "infeasible cell n=" + std::to_string(c.n) + " d=" + std::to_string(c.d));
    if (!(c.z.eta > 0)) fail(ErrorKind::InvalidArgument, "scan cell needs eta > 0");
  }

  VarianceScan scan;
  const std::size_t per = static_cast<std::size_t>(samples);
  scan.rows.resize(grid.size() * per);
  parallel_for(scan.rows.size(), workers, [&](std::size_t task) {
    const std::size_t c = task / per;
    const std::size_t i = task % per;
    const auto& cell = grid[c];
    const std::uint64_t seed = derive_seed(derive_seed(base_seed, c), i);
    const auto g = sample_configuration_model(cell.n, cell.d, derive_seed(seed, stream::graph));
    const auto q = build_direction(DirectionKind::random_orthogonal, cell.n, {}, derive_seed(seed, stream::direction));
    scan.rows[task] = local_law_error(g, cell.z, q, seed);
  });

  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<double> re, im, err;
    for (std::size_t i = 0; i < per; ++i) {
      const auto& r = scan.rows[c * per + i];
      re.push_back(r.gq.real());
      im.push_back(r.gq.imag());
      err.push_back(r.err);
    }
    ScanCellStats st;
    st.cell = grid[c];
    st.samples = samples;
    st.var_re = variance(re);
    st.var_im = variance(im);
    double total = 0;
    for (double e : err) total += e;
    st.mean_err = total / static_cast<double>(per);
    st.median_err = median(err);
    scan.cells.push_back(st);
  }

  std::map<int, std::vector<const ScanCellStats*>> by_d;
  for (const auto& st : scan.cells) by_d[st.cell.d].push_back(&st);
  for (const auto& [d, cells] : by_d) {
    std::vector<int> ns;
    for (const auto* st : cells) ns.push_back(st->cell.n);
    std::sort(ns.begin(), ns.end());
    if (std::unique(ns.begin(), ns.end()) - ns.begin() < 3) continue;
    for (const char* component : {"re", "im"}) {
      std::vector<std::pair<double, double>> pts;
      for (const auto* st : cells)
        pts.emplace_back(st->cell.n, std::string(component) == "re" ? st->var_re : st->var_im);
      const auto fit = scaling_fit(pts);
      scan.fits.push_back({d, component, fit.slope, fit.intercept, fit.stderr_slope});
    }
  }
  return scan;
}

std::string scan_csv(const VarianceScan& scan) {
  std::ostringstream out;
  out.precision(17);
  out << "n,d,E,eta,sample_idx,re_gq,im_gq,err,remainder_norm,fluct_norm,seed\n";
  const std::size_t per = scan.cells.empty() ? 0 : scan.rows.size() / scan.cells.size();
  for (std::size_t t = 0; t < scan.rows.size(); ++t) {
    const auto& r = scan.rows[t];
    out << r.n << ',' << r.d << ',' << r.z.E << ',' << r.z.eta << ',' << (per ? t % per : t) << ','
        << r.gq.real() << ',' << r.gq.imag() << ',' << r.err << ',' << r.remainder_norm << ','
        << r.fluct_norm << ',' << r.seed << '\n';
  }
  return out.str();
}

}  // namespace rrg

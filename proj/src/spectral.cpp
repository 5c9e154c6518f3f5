#include "rrglab/spectral.hpp"

#include <cmath>
#include <numbers>

#include "rrglab/error.hpp"
#include "rrglab/rng.hpp"

namespace rrg {

bool ComplexEnergy::edge_regime(int n, double eps) const {
  const double nn = n;
  return std::abs(E - 2.0) <= std::pow(nn, -2.0 / 3.0 + eps) && eta >= std::pow(nn, -2.0 / 3.0) &&
         eta <= 1.0;
}

SymMatrix normalize_adjacency(const RegularGraph& g) {
  if (g.d() < 1) fail(ErrorKind::InvalidArgument, "degree must be positive");
  return SymMatrix::adjacency(g, 1.0 / std::sqrt(static_cast<double>(g.d())));
}

SecondEigenpair second_eigenpair(const RegularGraph& g, std::uint64_t seed,
                                 const SecondEigenpairOptions& options) {
  const SymMatrix h = normalize_adjacency(g);
  const int n = g.n();
  if (n < 2) fail(ErrorKind::InvalidArgument, "need at least two vertices");

  LanczosOptions lanczos;
  lanczos.seed = derive_seed(seed, stream::solver);
  lanczos.deflate.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  lanczos.start = options.start;
  const int k = n >= 3 ? 2 : 1;
  const EigenSystem es = topk_eigenpairs(h, k, options.tol, lanczos);

  SecondEigenpair out;
  out.lambda2 = es.values[0];
  out.lambda3 = k > 1 ? es.values[1] : -std::numeric_limits<double>::infinity();
  out.u2 = es.vectors.col(0);
  out.degenerate = k > 1 && out.lambda2 - out.lambda3 < degeneracy_tolerance(h);
  out.matvecs = es.matvecs;

  Eigen::Index pivot = 0;
  out.u2.cwiseAbs().maxCoeff(&pivot);
  if (out.u2[pivot] < 0) out.u2 = -out.u2;
  if (options.randomize_sign) {
    Rng rng = make_rng(derive_seed(seed, stream::sign));
    if ((rng() >> 63) != 0) out.u2 = -out.u2;
  }
  return out;
}

std::complex<double> m_sc(std::complex<double> z) {
  if (z.imag() < 0) fail(ErrorKind::BranchUndefined, "Im z < 0");
  if (z.imag() == 0 && std::abs(z.real()) <= 2.0)
    fail(ErrorKind::BranchUndefined, "real z inside [-2, 2] has no limit branch");
  const std::complex<double> zz(z.real(), z.imag() == 0 ? 0.0 : z.imag());
  // sqrt(z-2) sqrt(z+2) ~ z at infinity and keeps Im m > 0 in the upper half-plane
  const std::complex<double> root = std::sqrt(zz - 2.0) * std::sqrt(zz + 2.0);
  // the two roots multiply to 1; -2/(z + root) avoids cancellation when |z| is large
  const std::complex<double> sum = zz + root;
  if (std::abs(sum) >= std::abs(root - zz)) return -2.0 / sum;
  return (-zz + root) / 2.0;
}

std::complex<double> m_sc(const ComplexEnergy& z) { return m_sc(z.z()); }

SymMatrix sample_constrained_goe(int n, std::uint64_t seed) {
  if (n < 2) fail(ErrorKind::InvalidArgument, "constrained GOE needs n >= 2");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  const double off_sd = 1.0 / std::sqrt(static_cast<double>(n));
  const double diag_sd = std::sqrt(2.0 / n);
  Eigen::MatrixXd w(n, n);
  for (int j = 0; j < n; ++j) {
    w(j, j) = diag_sd * normal(rng);
    for (int i = j + 1; i < n; ++i) w(i, j) = w(j, i) = off_sd * normal(rng);
  }
  // (PWP)_ij = W_ij - r_i - r_j + c with r the row means and c their mean
  const Eigen::VectorXd r = w.rowwise().mean();
  const double c = r.mean();
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      const double v = (w(i, j) - (r[i] + r[j])) + c;
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return SymMatrix::dense(std::move(w));
}

double normal_cdf(double x) {
  if (x > 8.0) return 1.0;
  if (x < -8.0) return 0.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace rrg

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "detail/gaps.hpp"
#include "rrglab/eigensolvers.hpp"
#include "rrglab/error.hpp"

namespace rrg {

int dense_limit() {
  if (const char* env = std::getenv("LAB_DENSE_LIMIT")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<int>(value);
  }
  return 4096;
}

double degeneracy_tolerance(const SymMatrix& h) {
  if (h.is_graph()) return 1e-8 * std::sqrt(static_cast<double>(h.graph()->d()));
  return 1e-8 * std::max(1.0, h.norm_bound());
}

void householder_tridiagonalize(Eigen::MatrixXd a, Eigen::VectorXd& diag, Eigen::VectorXd& offdiag,
                                Eigen::MatrixXd* q) {
  const Eigen::Index n = a.rows();
  diag.resize(n);
  offdiag.resize(std::max<Eigen::Index>(n - 1, 0));
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 1, 0));
  Eigen::VectorXd v, p;

  // Only the lower triangle of a is referenced and updated.
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index m = n - k - 1;
    auto x = a.col(k).tail(m);
    const double x0 = x[0];
    const double sigma = x.tail(m - 1).squaredNorm();
    diag[k] = a(k, k);
    if (sigma == 0.0) {
      offdiag[k] = x0;
      continue;
    }
    const double beta = -std::copysign(std::sqrt(x0 * x0 + sigma), x0);
    tau[k] = (beta - x0) / beta;
    x.tail(m - 1) /= (x0 - beta);
    x[0] = 1.0;
    offdiag[k] = beta;

    v = x;
    auto block = a.bottomRightCorner(m, m);
    p.noalias() = tau[k] * (block.selfadjointView<Eigen::Lower>() * v);
    p -= (0.5 * tau[k] * p.dot(v)) * v;
    block.selfadjointView<Eigen::Lower>().rankUpdate(v, p, -1.0);
  }
  if (n >= 2) {
    diag[n - 2] = a(n - 2, n - 2);
    offdiag[n - 2] = a(n - 1, n - 2);
  }
  if (n >= 1) diag[n - 1] = a(n - 1, n - 1);

  if (!q) return;
  q->setIdentity(n, n);
  Eigen::RowVectorXd w;
  for (Eigen::Index k = n - 3; k >= 0; --k) {
    if (tau[k] == 0.0) continue;
    const Eigen::Index m = n - k - 1;
    v = a.col(k).tail(m);
    v[0] = 1.0;
    auto block = q->bottomRightCorner(m, m);
    w.noalias() = v.transpose() * block;
    block.noalias() -= (tau[k] * v) * w;
  }
}

void tridiagonal_ql(Eigen::VectorXd& d, Eigen::VectorXd& offdiag, Eigen::MatrixXd* z) {
  const Eigen::Index n = d.size();
  if (n == 0) return;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e.head(n - 1) = offdiag;
  constexpr int kMaxIterations = 60;
  const double eps = std::numeric_limits<double>::epsilon();

  double shift_total = 0.0;
  double tst1 = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    Eigen::Index m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    int iterations = 0;
    while (m > l) {
      if (++iterations > kMaxIterations)
        fail(ErrorKind::NoConvergence, "implicit QL exceeded " + std::to_string(kMaxIterations) +
                                           " iterations for eigenvalue " + std::to_string(l));
      // Wilkinson-type shift from the leading 2x2 block
      double g = d[l];
      double p = (d[l + 1] - g) / (2.0 * e[l]);
      double r = std::hypot(p, 1.0);
      if (p < 0) r = -r;
      d[l] = e[l] / (p + r);
      d[l + 1] = e[l] * (p + r);
      const double dl1 = d[l + 1];
      double h = g - d[l];
      for (Eigen::Index i = l + 2; i < n; ++i) d[i] -= h;
      shift_total += h;

      p = d[m];
      double c = 1.0, c2 = 1.0, c3 = 1.0;
      const double el1 = e[l + 1];
      double s = 0.0, s2 = 0.0;
      for (Eigen::Index i = m - 1; i >= l; --i) {
        c3 = c2;
        c2 = c;
        s2 = s;
        g = c * e[i];
        h = c * p;
        r = std::hypot(p, e[i]);
        e[i + 1] = s * r;
        s = e[i] / r;
        c = p / r;
        p = c * d[i] - s * g;
        d[i + 1] = h + s * (c * g + s * d[i]);
        if (z) {
          auto zi = z->col(i);
          auto zi1 = z->col(i + 1);
          for (Eigen::Index k = 0; k < zi.size(); ++k) {
            const double t = zi1[k];
            zi1[k] = s * zi[k] + c * t;
            zi[k] = c * zi[k] - s * t;
          }
        }
      }
      p = -s * s2 * c3 * el1 * e[l] / dl1;
      e[l] = s * p;
      d[l] = c * p;
      if (std::abs(e[l]) <= eps * tst1) break;
    }
    d[l] += shift_total;
    e[l] = 0.0;
  }

  // ascending order
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
  Eigen::VectorXd sorted(n);
  for (Eigen::Index i = 0; i < n; ++i) sorted[i] = d[order[i]];
  d = sorted;
  if (z) {
    Eigen::MatrixXd zs(z->rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) zs.col(i) = z->col(order[i]);
    *z = std::move(zs);
  }
}

void symmetric_eigen(const Eigen::MatrixXd& a, Eigen::VectorXd& values, Eigen::MatrixXd* vectors) {
  Eigen::VectorXd off;
  householder_tridiagonalize(a, values, off, vectors);
  tridiagonal_ql(values, off, vectors);
  values.reverseInPlace();
  if (vectors) *vectors = vectors->rowwise().reverse().eval();
}

namespace {

std::vector<bool> flag_gaps(const Eigen::VectorXd& values, double tol, std::optional<double> next) {
  const auto k = static_cast<std::size_t>(values.size());
  std::vector<bool> flags(k, false);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (values[i] - values[i + 1] < tol) flags[i] = flags[i + 1] = true;
  }
  if (k > 0 && next && values[k - 1] - *next < tol) flags[k - 1] = true;
  return flags;
}

// Graph matrices carry the exact Perron vector e/sqrt(n); pin it and clean
// the remaining columns of any e component.
void pin_perron_vector(const SymMatrix& h, EigenSystem& es, double tol) {
  const int n = h.n();
  if (n == 0) return;
  const Eigen::VectorXd e = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  es.vectors.col(0) = e;
  for (int j = 1; j < es.size(); ++j) {
    auto col = es.vectors.col(j);
    col -= col.dot(e) * e;
    if (es.values[0] - es.values[j] < tol) {
      for (int i = 1; i < j; ++i) col -= es.vectors.col(i).dot(col) * es.vectors.col(i);
    }
    col.normalize();
  }
}

}  // namespace

std::vector<bool> gap_flags_for(const Eigen::VectorXd& values, double tol, std::optional<double> next) {
  return flag_gaps(values, tol, next);
}

EigenSystem full_eigensystem(const SymMatrix& h) {
  if (h.n() > dense_limit())
    fail(ErrorKind::TooLarge, "dimension " + std::to_string(h.n()) + " exceeds dense limit " +
                                  std::to_string(dense_limit()));
  EigenSystem es;
  es.kind = EigenSystem::Kind::full;
  symmetric_eigen(h.to_dense(), es.values, &es.vectors);
  const double tol = degeneracy_tolerance(h);
  if (h.is_graph() && h.scale() > 0) {
    const auto* g = h.graph();
    const bool regular = validate_regular(*g).empty();
    if (regular && g->d() > 0) pin_perron_vector(h, es, tol);
  }
  es.gap_flags = flag_gaps(es.values, tol, std::nullopt);
  return es;
}

}  // namespace rrg

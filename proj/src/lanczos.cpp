#include <algorithm>
#include <cmath>

#include "detail/gaps.hpp"
#include "rrglab/eigensolvers.hpp"
#include "rrglab/error.hpp"
#include "rrglab/rng.hpp"

namespace rrg {

namespace {

class KrylovBasis {
 public:
  KrylovBasis(int n, int capacity, const std::vector<Eigen::VectorXd>& deflate)
      : v_(n, capacity), deflate_(deflate) {}

  Eigen::Index size() const { return size_; }
  auto col(Eigen::Index j) { return v_.col(j); }
  auto cols(Eigen::Index count) const { return v_.leftCols(count); }
  Eigen::MatrixXd& storage() { return v_; }
  void resize(Eigen::Index size) { size_ = size; }

  /// Classical Gram-Schmidt against deflation vectors and the basis, applied
  /// twice. Returns the basis coefficients.
  Eigen::VectorXd orthogonalize(Eigen::VectorXd& w) const {
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(size_);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : deflate_) w -= u.dot(w) * u;
      if (size_ > 0) {
        const Eigen::VectorXd h = v_.leftCols(size_).transpose() * w;
        w.noalias() -= v_.leftCols(size_) * h;
        coeff += h;
      }
    }
    return coeff;
  }

  /// Appends a unit vector orthogonal to everything so far, or returns false
  /// if the space is exhausted.
  bool append_random(Rng& rng, int n_eff) {
    if (size_ >= n_eff) return false;
    std::normal_distribution<double> normal;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXd w(v_.rows());
      for (auto& x : w) x = normal(rng);
      const double before = w.norm();
      orthogonalize(w);
      const double after = w.norm();
      if (after > 1e-8 * before) {
        v_.col(size_++) = w / after;
        return true;
      }
    }
    return false;
  }

  void append(const Eigen::VectorXd& unit) { v_.col(size_++) = unit; }

 private:
  Eigen::MatrixXd v_;
  Eigen::Index size_ = 0;
  const std::vector<Eigen::VectorXd>& deflate_;
};

}  // namespace

EigenSystem topk_eigenpairs(const SymOperator& op, int k, double tol, const LanczosOptions& options,
                            double degeneracy_tol) {
  const int n = op.n;
  const int n_eff = n - static_cast<int>(options.deflate.size());
  if (k < 1 || k > std::min(n_eff, 32))
    fail(ErrorKind::InvalidArgument, "k = " + std::to_string(k) + " outside [1, min(n, 32)]");
  if (!(tol > 0)) fail(ErrorKind::InvalidArgument, "tolerance must be positive");

  // One extra pair (when it exists) decides the gap flag of the k-th value.
  const int wanted = std::min(k + 1, n_eff);
  const int basis = std::min(n_eff, options.max_basis > 0 ? options.max_basis
                                                          : std::max(2 * wanted + 40, 100));
  const long max_matvecs =
      options.max_matvecs > 0 ? options.max_matvecs : std::max<long>(20L * n, 5000L);
  const double scale = std::max(1.0, op.norm_bound);
  const double threshold = tol * scale;

  Rng rng = make_rng(options.seed);
  KrylovBasis v(n, basis + 1, options.deflate);
  if (options.start) {
    Eigen::VectorXd w = *options.start;
    v.orthogonalize(w);
    if (w.norm() > 1e-8 * options.start->norm()) v.append(w.normalized());
  }
  if (v.size() == 0 && !v.append_random(rng, n_eff))
    fail(ErrorKind::InvalidArgument, "no admissible start vector");

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(basis + 1, basis + 1);
  Eigen::VectorXd w(n), ritz_values;
  Eigen::MatrixXd ritz_vectors;
  Eigen::Index done = 0;
  double beta_last = 0.0;
  long matvecs = 0;

  while (true) {
    // Expand: H v_j for each basis vector not yet multiplied.
    while (done < basis && done < v.size()) {
      op.apply(v.col(done), w);
      ++matvecs;
      const Eigen::Index size = v.size();
      const Eigen::VectorXd h = v.orthogonalize(w);
      for (Eigen::Index i = 0; i < size; ++i) t(i, done) = t(done, i) = h[i];
      ++done;
      beta_last = w.norm();
      if (done < v.size()) continue;  // previously refilled vector pending
      if (v.size() >= n_eff) {
        beta_last = 0.0;
        break;
      }
      if (beta_last > 1e-12 * scale) {
        v.append(w / beta_last);
      } else {
        // invariant subspace; restart the Krylov sequence elsewhere
        beta_last = 0.0;
        if (!v.append_random(rng, n_eff)) break;
      }
    }

    const Eigen::Index m = done;
    symmetric_eigen(t.topLeftCorner(m, m), ritz_values, &ritz_vectors);

    const Eigen::Index have = std::min<Eigen::Index>(wanted, m);
    bool converged = have >= wanted || m >= n_eff;
    for (Eigen::Index i = 0; i < have && converged; ++i)
      converged = beta_last * std::abs(ritz_vectors(m - 1, i)) <= threshold;

    if (converged || v.size() <= m) {
      if (!converged && v.size() <= m && m < n_eff)
        fail(ErrorKind::NoConvergence, "Krylov space exhausted before convergence");
      EigenSystem es;
      es.kind = EigenSystem::Kind::partial;
      es.values = ritz_values.head(k);
      es.vectors = v.cols(m) * ritz_vectors.leftCols(k);
      for (int j = 0; j < k; ++j) es.vectors.col(j).normalize();
      std::optional<double> next;
      if (wanted > k && m > k) next = ritz_values[k];
      es.gap_flags = gap_flags_for(es.values, degeneracy_tol, next);
      es.matvecs = matvecs;
      return es;
    }
    if (matvecs >= max_matvecs)
      fail(ErrorKind::NoConvergence, "Lanczos did not converge within " +
                                         std::to_string(max_matvecs) + " matrix-vector products");

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    const Eigen::Index keep =
        std::min<Eigen::Index>(m - 1, std::max<Eigen::Index>(wanted + 10, basis / 2));
    const Eigen::VectorXd residual = v.col(m);
    Eigen::MatrixXd kept = v.cols(m) * ritz_vectors.leftCols(keep);
    v.storage().leftCols(keep) = kept;
    v.storage().col(keep) = residual;
    v.resize(keep + 1);
    t.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) t(i, i) = ritz_values[i];
    done = keep;
  }
}

EigenSystem topk_eigenpairs(const SymMatrix& h, int k, double tol, const LanczosOptions& options) {
  const double degeneracy = options.degeneracy_tol >= 0 ? options.degeneracy_tol : degeneracy_tolerance(h);
  return topk_eigenpairs(SymOperator::from(h), k, tol, options, degeneracy);
}

}  // namespace rrg

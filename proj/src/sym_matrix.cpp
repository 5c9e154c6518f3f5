#include "rrglab/sym_matrix.hpp"

#include <algorithm>

#include "rrglab/error.hpp"

namespace rrg {

SymMatrix SymMatrix::dense(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidArgument, "matrix is not square");
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = j + 1; i < m.rows(); ++i)
      if (m(i, j) != m(j, i)) fail(ErrorKind::InvalidArgument, "matrix is not symmetric");
  SymMatrix out;
  out.n_ = static_cast<int>(m.rows());
  out.dense_ = std::make_shared<const Eigen::MatrixXd>(std::move(m));
  return out;
}

SymMatrix SymMatrix::zero(int n) { return dense(Eigen::MatrixXd::Zero(n, n)); }

SymMatrix SymMatrix::adjacency(const RegularGraph& g, double scale) {
  SymMatrix out;
  out.n_ = g.n();
  out.scale_ = scale;
  out.graph_ = std::make_shared<const RegularGraph>(g);
  return out;
}

double SymMatrix::entry(int i, int j) const {
  if (dense_) return (*dense_)(i, j);
  return graph_->has_edge(i, j) ? scale_ : 0.0;
}

void SymMatrix::apply(const Eigen::Ref<const Eigen::VectorXd>& x,
                      Eigen::Ref<Eigen::VectorXd> y) const {
  if (dense_) {
    y.noalias() = *dense_ * x;
    return;
  }
  for (int i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (int j : graph_->neighbors(i)) sum += x[j];
    y[i] = scale_ * sum;
  }
}

void SymMatrix::apply_block(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            Eigen::Ref<Eigen::MatrixXd> y) const {
  if (dense_) {
    y.noalias() = *dense_ * x;
    return;
  }
  for (int i = 0; i < n_; ++i) {
    y.row(i).setZero();
    for (int j : graph_->neighbors(i)) y.row(i) += x.row(j);
  }
  y *= scale_;
}

Eigen::VectorXd SymMatrix::operator*(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(n_);
  apply(x, y);
  return y;
}

Eigen::MatrixXd SymMatrix::to_dense() const {
  if (dense_) return *dense_;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& e : graph_->edges()) {
    m(e.u, e.v) = scale_;
    m(e.v, e.u) = scale_;
  }
  return m;
}

double SymMatrix::norm_bound() const {
  if (dense_) {
    const double frob = dense_->norm();
    const double rows = n_ == 0 ? 0.0 : dense_->cwiseAbs().rowwise().sum().maxCoeff();
    return std::min(frob, rows);
  }
  int max_degree = 0;
  for (int v = 0; v < n_; ++v)
    max_degree = std::max(max_degree, static_cast<int>(graph_->neighbors(v).size()));
  return std::abs(scale_) * max_degree;
}

SymOperator SymOperator::from(const SymMatrix& h) {
  return {h.n(), h.norm_bound(),
          [h](const Eigen::VectorXd& x, Eigen::VectorXd& y) { h.apply(x, y); }};
}

}  // namespace rrg

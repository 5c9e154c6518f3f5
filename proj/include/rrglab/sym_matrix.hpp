#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "rrglab/graph.hpp"

namespace rrg {

/// Real symmetric matrix, held either densely or as a scaled graph adjacency
/// (entries `scale` on edges, 0 elsewhere). Copies share storage.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Dense storage. Throws InvalidArgument unless m is square and exactly symmetric.
  static SymMatrix dense(Eigen::MatrixXd m);
  static SymMatrix zero(int n);
  static SymMatrix adjacency(const RegularGraph& g, double scale);

  int n() const { return n_; }
  bool is_graph() const { return static_cast<bool>(graph_); }
  double scale() const { return scale_; }
  /// Graph backing a graph-storage matrix; null for dense storage.
  const RegularGraph* graph() const { return graph_.get(); }
  /// Dense backing matrix; null for graph storage.
  const Eigen::MatrixXd* dense_data() const { return dense_.get(); }

  double entry(int i, int j) const;

  /// y = H x
  void apply(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> y) const;
  /// Y = H X, column by column.
  void apply_block(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;

  /// Cheap upper bound on the operator norm.
  double norm_bound() const;

 private:
  int n_ = 0;
  double scale_ = 1.0;
  std::shared_ptr<const Eigen::MatrixXd> dense_;
  std::shared_ptr<const RegularGraph> graph_;
};

/// Matrix-free symmetric operator, used by the iterative solvers.
struct SymOperator {
  int n = 0;
  double norm_bound = 1.0;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;

  static SymOperator from(const SymMatrix& h);
};

}  // namespace rrg

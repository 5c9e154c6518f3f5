#pragma once

#include <algorithm>
#include <cassert>
#include <vector>

#include "rrglab/graph.hpp"

namespace rrg::detail {

// Fixed-capacity adjacency (d slots per vertex) supporting O(d) edge queries
// and in-place rewiring. Used by the sampler and the switching chain.
class MutableGraph {
 public:
  MutableGraph(int n, int d)
      : n_(n), d_(d), slots_(static_cast<std::size_t>(n) * d, -1), degree_(n, 0) {}

  explicit MutableGraph(const RegularGraph& g) : MutableGraph(g.n(), g.d()) {
    edges_.reserve(g.edge_count());
    for (const auto& e : g.edges()) add_edge(e.u, e.v);
  }

  int n() const { return n_; }
  int d() const { return d_; }
  std::vector<Edge>& edges() { return edges_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int degree(int v) const { return degree_[v]; }

  bool has_edge(int a, int b) const {
    const int* row = slots_.data() + static_cast<std::size_t>(a) * d_;
    for (int k = 0; k < degree_[a]; ++k)
      if (row[k] == b) return true;
    return false;
  }

  void add_edge(int a, int b) {
    assert(degree_[a] < d_ && degree_[b] < d_);
    slots_[static_cast<std::size_t>(a) * d_ + degree_[a]++] = b;
    slots_[static_cast<std::size_t>(b) * d_ + degree_[b]++] = a;
    edges_.push_back(make_edge(a, b));
  }

  void replace_neighbor(int v, int old_nb, int new_nb) {
    int* row = slots_.data() + static_cast<std::size_t>(v) * d_;
    for (int k = 0; k < degree_[v]; ++k) {
      if (row[k] == old_nb) {
        row[k] = new_nb;
        return;
      }
    }
    assert(false && "neighbor not found");
  }

  void clear() {
    std::fill(degree_.begin(), degree_.end(), 0);
    edges_.clear();
  }

  RegularGraph freeze() const { return RegularGraph(n_, d_, edges_); }

 private:
  int n_;
  int d_;
  std::vector<int> slots_;
  std::vector<int> degree_;
  std::vector<Edge> edges_;
};

}  // namespace rrg::detail

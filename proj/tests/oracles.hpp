#pragma once
// Independent reference computations used only by the test suites.

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <vector>

#include "rrglab/graph.hpp"

namespace oracle {

/// All labeled d-regular graphs on n vertices by brute force over edge subsets.
inline std::vector<std::vector<rrg::Edge>> brute_force_regular(int n, int d) {
  std::vector<rrg::Edge> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.push_back({i, j});
  const int m = static_cast<int>(all.size());
  const int want = n * d / 2;
  std::vector<std::vector<rrg::Edge>> out;
  for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
    if (__builtin_popcountl(mask) != want) continue;
    std::vector<int> deg(n, 0);
    std::vector<rrg::Edge> edges;
    for (int b = 0; b < m; ++b) {
      if (mask >> b & 1UL) {
        ++deg[all[b].u];
        ++deg[all[b].v];
        edges.push_back(all[b]);
      }
    }
    bool ok = true;
    for (int v = 0; v < n; ++v) ok = ok && deg[v] == d;
    if (ok) out.push_back(edges);
  }
  return out;
}

/// Upper-tail probability of the chi-square statistic for equal expected counts.
inline double chi_square_uniform_p(const std::vector<long>& counts) {
  double total = 0;
  for (long c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  const double dof = static_cast<double>(counts.size()) - 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

/// Index lookup of sorted edge lists.
class GraphIndex {
 public:
  explicit GraphIndex(const std::vector<std::vector<rrg::Edge>>& graphs) {
    for (std::size_t i = 0; i < graphs.size(); ++i) index_[graphs[i]] = i;
  }
  std::size_t size() const { return index_.size(); }
  std::size_t at(const rrg::RegularGraph& g) const {
    return index_.at(std::vector<rrg::Edge>(g.edges().begin(), g.edges().end()));
  }

 private:
  std::map<std::vector<rrg::Edge>, std::size_t> index_;
};

}  // namespace oracle

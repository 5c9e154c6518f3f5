#include <array>

#include "rrglab/error.hpp"
#include "rrglab/graph.hpp"

namespace rrg {

namespace {

class Enumerator {
 public:
  Enumerator(int n, int d, const std::function<void(std::span<const Edge>)>& visit)
      : n_(n), deficit_(static_cast<std::size_t>(n), d), visit_(visit) {}

  std::size_t run() {
    extend(0);
    return count_;
  }

 private:
  // Vertices are completed in increasing order; each vertex takes all its
  // remaining neighbors from higher-numbered vertices, chosen as combinations
  // in increasing order. This emits sorted edge lists lexicographically.
  void extend(int from) {
    int v = from;
    while (v < n_ && deficit_[v] == 0) ++v;
    if (v == n_) {
      ++count_;
      visit_(edges_);
      return;
    }
    choose(v, v + 1, deficit_[v]);
  }

  void choose(int v, int start, int need) {
    if (need == 0) {
      extend(v + 1);
      return;
    }
    for (int w = start; w < n_; ++w) {
      if (deficit_[w] == 0) continue;
      --deficit_[w];
      --deficit_[v];
      edges_.push_back({v, w});
      choose(v, w + 1, need - 1);
      edges_.pop_back();
      ++deficit_[v];
      ++deficit_[w];
    }
  }

  int n_;
  std::vector<int> deficit_;
  std::vector<Edge> edges_;
  const std::function<void(std::span<const Edge>)>& visit_;
  std::size_t count_ = 0;
};

}  // namespace

std::size_t for_each_regular_graph(int n, int d,
                                   const std::function<void(std::span<const Edge>)>& visit) {
  if (n > kEnumerateMaxN || d > kEnumerateMaxD)
    fail(ErrorKind::TooLarge, "enumeration is limited to n <= " + std::to_string(kEnumerateMaxN) +
                                  " and d <= " + std::to_string(kEnumerateMaxD));
  if (n < 0 || d < 0) fail(ErrorKind::InvalidArgument, "negative n or d");
  if ((n * d) % 2 != 0 || (d > 0 && d >= n)) return 0;
  return Enumerator(n, d, visit).run();
}

std::vector<RegularGraph> enumerate_regular_graphs(int n, int d) {
  std::vector<RegularGraph> out;
  for_each_regular_graph(n, d, [&](std::span<const Edge> edges) {
    out.emplace_back(n, d, std::vector<Edge>(edges.begin(), edges.end()));
  });
  return out;
}

}  // namespace rrg

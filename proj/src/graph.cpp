#include "rrglab/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "rrglab/error.hpp"

namespace rrg {

RegularGraph::RegularGraph(int n, int d, std::vector<Edge> edges)
    : n_(n), d_(d), edges_(std::move(edges)) {
  if (n < 0 || d < 0) fail(ErrorKind::InvalidArgument, "negative vertex count or degree");
  for (auto& e : edges_) e = make_edge(e.u, e.v);
  std::sort(edges_.begin(), edges_.end());

  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& e : edges_) {
    if (e.u < 0 || e.v >= n) continue;
    ++offsets_[e.u + 1];
    if (e.u != e.v) ++offsets_[e.v + 1];
  }
  for (int v = 0; v < n; ++v) offsets_[v + 1] += offsets_[v];
  adjacency_.resize(offsets_.back());
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    if (e.u < 0 || e.v >= n) continue;
    adjacency_[fill[e.u]++] = e.v;
    if (e.u != e.v) adjacency_[fill[e.v]++] = e.u;
  }
  for (int v = 0; v < n; ++v)
    std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
}

std::span<const int> RegularGraph::neighbors(int v) const {
  return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
}

int RegularGraph::degree(int v) const {
  // a self-loop contributes 2 to the degree but is listed once
  int deg = offsets_[v + 1] - offsets_[v];
  for (int w : neighbors(v))
    if (w == v) ++deg;
  return deg;
}

bool RegularGraph::has_edge(int a, int b) const {
  if (a < 0 || b < 0 || a >= n_ || b >= n_) return false;
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::vector<Violation> validate_regular(const RegularGraph& g) {
  std::vector<Violation> out;
  const int n = g.n();
  const int d = g.d();
  auto describe = [](Edge e) {
    return "(" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
  };

  if ((static_cast<long long>(n) * d) % 2 != 0)
    out.push_back({Violation::Kind::OddDegreeSum, -1, {-1, -1},
                   "n*d = " + std::to_string(static_cast<long long>(n) * d) + " is odd"});

  const auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge e = edges[i];
    if (e.u < 0 || e.v >= n) {
      out.push_back({Violation::Kind::VertexOutOfRange, -1, e,
                     "edge " + describe(e) + " references a vertex outside [0," +
                         std::to_string(n) + ")"});
      continue;
    }
    if (e.u == e.v)
      out.push_back({Violation::Kind::SelfLoop, e.u, e, "self-loop " + describe(e)});
    if (i > 0 && edges[i - 1] == e && (i < 2 || edges[i - 2] != e))
      out.push_back({Violation::Kind::MultiEdge, -1, e, "multi-edge " + describe(e)});
  }

  for (int v = 0; v < n; ++v) {
    const int deg = g.degree(v);
    if (deg != d)
      out.push_back({Violation::Kind::WrongDegree, v, {-1, -1},
                     "vertex " + std::to_string(v) + " has degree " + std::to_string(deg) +
                         ", expected " + std::to_string(d)});
  }

  const long long expected = static_cast<long long>(n) * d / 2;
  if (static_cast<long long>(edges.size()) != expected)
    out.push_back({Violation::Kind::EdgeCount, -1, {-1, -1},
                   std::to_string(edges.size()) + " edges, expected " + std::to_string(expected)});
  return out;
}

bool is_valid_regular(const RegularGraph& g) { return validate_regular(g).empty(); }

void write_graph(std::ostream& out, const RegularGraph& g) {
  out << g.n() << ' ' << g.d() << '\n';
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

RegularGraph read_graph(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) fail(ErrorKind::ParseError, "line 1: missing header 'n d'");
  int n = 0, d = 0;
  {
    std::istringstream header(line);
    std::string rest;
    if (!(header >> n >> d) || (header >> rest))
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 'n d'");
  }
  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream row(line);
    int i = 0, j = 0;
    std::string rest;
    if (!(row >> i >> j) || (row >> rest))
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 'i j'");
    if (i >= j)
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": requires i < j");
    if (!edges.empty() && !(edges.back() < Edge{i, j}))
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": edges not sorted");
    edges.push_back({i, j});
  }
  return RegularGraph(n, d, std::move(edges));
}

}  // namespace rrg

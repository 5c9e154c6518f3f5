#include <algorithm>

#include "detail/mutable_graph.hpp"
#include "detail/walk.hpp"
#include "rrglab/error.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/rng.hpp"

namespace rrg {

namespace {

std::string describe(Edge e) {
  return "(" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
}

}  // namespace

std::array<Edge, 2> Switching::replacement() const {
  const auto [i, j] = first;
  const auto [k, l] = second;
  if (variant == SwitchVariant::parallel) return {make_edge(i, k), make_edge(j, l)};
  return {make_edge(i, l), make_edge(j, k)};
}

Switching Switching::inverse() const {
  const auto [i, j] = first;
  const auto [k, l] = second;
  // {i,x},{j,y} with the parallel variant restores {i,j},{x,y}
  const int x = variant == SwitchVariant::parallel ? k : l;
  const int y = variant == SwitchVariant::parallel ? l : k;
  return {Edge{i, x}, Edge{j, y}, SwitchVariant::parallel};
}

std::optional<std::string> switching_problem(const RegularGraph& g, const Switching& s) {
  const auto [i, j] = s.first;
  const auto [k, l] = s.second;
  if (!g.has_edge(i, j)) return "missing edge " + describe(s.first);
  if (!g.has_edge(k, l)) return "missing edge " + describe(s.second);
  for (int a : {i, j})
    for (int b : {k, l})
      if (a == b) return "shared vertex " + std::to_string(a);
  for (const Edge r : s.replacement())
    if (g.has_edge(r.u, r.v)) return "edge " + describe(r) + " already present";
  return std::nullopt;
}

std::vector<Switching> list_switchable_pairs(const RegularGraph& g, Edge e) {
  if (!g.has_edge(e.u, e.v)) fail(ErrorKind::EdgeNotPresent, "edge " + describe(e));
  std::vector<Switching> out;
  for (const Edge other : g.edges()) {
    if (other.u == e.u || other.u == e.v || other.v == e.u || other.v == e.v) continue;
    for (auto variant : {SwitchVariant::parallel, SwitchVariant::crossed}) {
      const Switching s{e, other, variant};
      const auto r = s.replacement();
      if (!g.has_edge(r[0].u, r[0].v) && !g.has_edge(r[1].u, r[1].v)) out.push_back(s);
    }
  }
  return out;
}

RegularGraph apply_switching(const RegularGraph& g, const Switching& s) {
  if (auto problem = switching_problem(g, s))
    fail(ErrorKind::InvalidSwitching, *problem);
  const Edge a = make_edge(s.first.u, s.first.v);
  const Edge b = make_edge(s.second.u, s.second.v);
  const auto r = s.replacement();
  std::vector<Edge> edges;
  edges.reserve(g.edge_count());
  for (const Edge e : g.edges())
    if (e != a && e != b) edges.push_back(e);
  edges.push_back(r[0]);
  edges.push_back(r[1]);
  return RegularGraph(g.n(), g.d(), std::move(edges));
}

namespace detail {

bool try_switch(MutableGraph& g, std::size_t a, std::size_t b, bool crossed) {
  auto& edges = g.edges();
  const auto [i, j] = edges[a];
  const auto [k, l] = edges[b];
  if (i == k || i == l || j == k || j == l) return false;
  const int x = crossed ? l : k;
  const int y = crossed ? k : l;
  if (g.has_edge(i, x) || g.has_edge(j, y)) return false;
  g.replace_neighbor(i, j, x);
  g.replace_neighbor(j, i, y);
  g.replace_neighbor(x, y, i);
  g.replace_neighbor(y, x, j);
  edges[a] = make_edge(i, x);
  edges[b] = make_edge(j, y);
  return true;
}

std::uint64_t run_walk(MutableGraph& g, std::uint64_t steps, Rng& rng) {
  const std::size_t m = g.edges().size();
  if (m < 2) return 0;
  std::uniform_int_distribution<std::size_t> pick_first(0, m - 1);
  std::uniform_int_distribution<std::size_t> pick_second(0, m - 2);
  std::uint64_t accepted = 0;
  for (std::uint64_t step = 0; step < steps; ++step) {
    const std::size_t a = pick_first(rng);
    std::size_t b = pick_second(rng);
    if (b >= a) ++b;
    const bool crossed = (rng() >> 63) != 0;
    if (try_switch(g, a, b, crossed)) ++accepted;
  }
  return accepted;
}

}  // namespace detail

RegularGraph switching_walk(const RegularGraph& g, std::uint64_t steps, std::uint64_t seed) {
  if (steps == 0) return g;
  detail::MutableGraph work(g);
  Rng rng = make_rng(seed);
  detail::run_walk(work, steps, rng);
  return work.freeze();
}

}  // namespace rrg

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rrg {

/// Unordered vertex pair stored with u <= v.
struct Edge {
  int u = 0;
  int v = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Labeled simple graph that is meant to be d-regular. Construction does not
/// enforce the regularity invariants (see validate_regular); every sampler and
/// rewiring operation in this library produces valid graphs.
class RegularGraph {
 public:
  RegularGraph() = default;
  RegularGraph(int n, int d, std::vector<Edge> edges);

  int n() const { return n_; }
  int d() const { return d_; }
  std::span<const Edge> edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  /// Sorted neighbor list; repeats appear once per parallel edge.
  std::span<const int> neighbors(int v) const;
  int degree(int v) const;
  bool has_edge(int a, int b) const;

  friend bool operator==(const RegularGraph& a, const RegularGraph& b) {
    return a.n_ == b.n_ && a.d_ == b.d_ && a.edges_ == b.edges_;
  }

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> offsets_;
  std::vector<int> adjacency_;
};

struct Violation {
  enum class Kind { OddDegreeSum, VertexOutOfRange, SelfLoop, MultiEdge, WrongDegree, EdgeCount };
  Kind kind;
  int vertex = -1;
  Edge edge{-1, -1};
  std::string message;
};

/// Every violated regularity invariant with the offending vertex or edge.
/// Empty means valid.
std::vector<Violation> validate_regular(const RegularGraph& g);
bool is_valid_regular(const RegularGraph& g);

// ---------------------------------------------------------------------------
// Sampling

enum class SamplerMode {
  automatic,        ///< exact rejection when its acceptance rate is workable, else pairing_switch
  exact_rejection,  ///< whole-matching rejection; exactly uniform
  pairing_switch,   ///< sequential pairing + switching chain; approximately uniform
};

struct SamplerOptions {
  std::uint64_t max_retries = 1'000'000;
  SamplerMode mode = SamplerMode::automatic;
  /// automatic mode falls back to pairing_switch below this estimated acceptance rate
  double min_acceptance = 1e-3;
  /// switching steps per edge applied after sequential pairing
  double mixing_sweeps = 20.0;
};

/// Estimated probability that a uniform pairing is simple, exp(-(d^2-1)/4).
double configuration_acceptance(int d);

SamplerMode resolve_sampler_mode(int d, const SamplerOptions& options);

RegularGraph sample_configuration_model(int n, int d, std::uint64_t seed,
                                        const SamplerOptions& options = {});

// ---------------------------------------------------------------------------
// Exact enumeration (uniformity oracle)

inline constexpr int kEnumerateMaxN = 10;
inline constexpr int kEnumerateMaxD = 3;

/// Visits every labeled simple d-regular graph on n vertices as a sorted edge
/// list, in lexicographic order. Returns the number visited.
std::size_t for_each_regular_graph(int n, int d,
                                   const std::function<void(std::span<const Edge>)>& visit);
std::vector<RegularGraph> enumerate_regular_graphs(int n, int d);

// ---------------------------------------------------------------------------
// Switchings

enum class SwitchVariant { parallel, crossed };

/// Replaces first = {i,j} and second = {k,l} with {i,k},{j,l} (parallel) or
/// {i,l},{j,k} (crossed). Endpoint order of first/second is significant.
struct Switching {
  Edge first;
  Edge second;
  SwitchVariant variant = SwitchVariant::parallel;

  std::array<Edge, 2> replacement() const;
  Switching inverse() const;
};

/// Reason the switching cannot be applied to g, or nullopt if it is valid.
std::optional<std::string> switching_problem(const RegularGraph& g, const Switching& s);

std::vector<Switching> list_switchable_pairs(const RegularGraph& g, Edge e);
RegularGraph apply_switching(const RegularGraph& g, const Switching& s);

/// Lazy switching chain: each step proposes a uniform ordered pair of distinct
/// edges and a uniform variant; invalid proposals leave the graph unchanged.
RegularGraph switching_walk(const RegularGraph& g, std::uint64_t steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Text format: "n d" then one "i j" line per edge, i < j, sorted.

void write_graph(std::ostream& out, const RegularGraph& g);
RegularGraph read_graph(std::istream& in);

}  // namespace rrg

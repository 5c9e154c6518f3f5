#include <cmath>
#include <numeric>

#include "detail/mutable_graph.hpp"
#include "detail/walk.hpp"
#include "rrglab/error.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/rng.hpp"

namespace rrg {

namespace {

void check_feasible(int n, int d) {
  if (n < 1 || d < 1) fail(ErrorKind::InvalidArgument, "need n >= 1 and d >= 1");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    fail(ErrorKind::OddDegreeSum,
         "n*d = " + std::to_string(static_cast<long long>(n) * d) + " half-edges cannot be matched");
  if (d >= n)
    fail(ErrorKind::InfeasibleDegree,
         "degree " + std::to_string(d) + " needs more than " + std::to_string(n) + " vertices");
}

std::vector<int> half_edges(int n, int d) {
  std::vector<int> points(static_cast<std::size_t>(n) * d);
  for (int v = 0; v < n; ++v)
    std::fill_n(points.begin() + static_cast<std::ptrdiff_t>(v) * d, d, v);
  return points;
}

RegularGraph sample_by_rejection(int n, int d, std::uint64_t seed, std::uint64_t max_retries) {
  Rng rng = make_rng(seed);
  std::vector<int> points = half_edges(n, d);
  detail::MutableGraph work(n, d);
  for (std::uint64_t attempt = 0; attempt < max_retries; ++attempt) {
    // Fisher-Yates, then consecutive entries form a uniform perfect matching.
    for (std::size_t i = points.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(points[i], points[pick(rng)]);
    }
    work.clear();
    bool simple = true;
    for (std::size_t i = 0; i < points.size(); i += 2) {
      const int a = points[i];
      const int b = points[i + 1];
      if (a == b || work.has_edge(a, b)) {
        simple = false;
        break;
      }
      work.add_edge(a, b);
    }
    if (simple) return work.freeze();
  }
  fail(ErrorKind::RetryBudgetExceeded,
       std::to_string(max_retries) + " consecutive pairings of (n=" + std::to_string(n) +
           ", d=" + std::to_string(d) + ") were not simple");
}

// Sequential pairing that only ever joins two points if the result stays
// simple; restarts when stuck. Biased for growing d, hence the mixing walk.
bool pair_sequentially(detail::MutableGraph& work, std::vector<int>& points, Rng& rng) {
  work.clear();
  constexpr int kQuickTries = 64;
  while (!points.empty()) {
    bool joined = false;
    for (int t = 0; t < kQuickTries && !joined; ++t) {
      std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
      std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      if (i == j) continue;
      const int a = points[i];
      const int b = points[j];
      if (a == b || work.has_edge(a, b)) continue;
      work.add_edge(a, b);
      if (i < j) std::swap(i, j);
      points[i] = points.back();
      points.pop_back();
      points[j] = points.back();
      points.pop_back();
      joined = true;
    }
    if (joined) continue;
    // exhaustive scan for any admissible pair among the leftovers
    std::vector<std::pair<std::size_t, std::size_t>> admissible;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        if (points[i] != points[j] && !work.has_edge(points[i], points[j]))
          admissible.emplace_back(i, j);
    if (admissible.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, admissible.size() - 1);
    auto [i, j] = admissible[pick(rng)];
    work.add_edge(points[i], points[j]);
    points[j] = points.back();
    points.pop_back();
    points[i] = points.back();
    points.pop_back();
  }
  return true;
}

RegularGraph sample_by_pairing(int n, int d, std::uint64_t seed, const SamplerOptions& options) {
  Rng rng = make_rng(seed);
  detail::MutableGraph work(n, d);
  for (std::uint64_t attempt = 0; attempt < options.max_retries; ++attempt) {
    std::vector<int> points = half_edges(n, d);
    if (!pair_sequentially(work, points, rng)) continue;
    const auto steps = static_cast<std::uint64_t>(
        std::ceil(options.mixing_sweeps * static_cast<double>(work.edges().size())));
    detail::run_walk(work, steps, rng);
    return work.freeze();
  }
  fail(ErrorKind::RetryBudgetExceeded,
       "sequential pairing of (n=" + std::to_string(n) + ", d=" + std::to_string(d) +
           ") got stuck " + std::to_string(options.max_retries) + " times");
}

}  // namespace

double configuration_acceptance(int d) {
  const double dd = d;
  return std::exp(-(dd * dd - 1.0) / 4.0);
}

SamplerMode resolve_sampler_mode(int d, const SamplerOptions& options) {
  if (options.mode != SamplerMode::automatic) return options.mode;
  return configuration_acceptance(d) >= options.min_acceptance ? SamplerMode::exact_rejection
                                                               : SamplerMode::pairing_switch;
}

RegularGraph sample_configuration_model(int n, int d, std::uint64_t seed,
                                        const SamplerOptions& options) {
  check_feasible(n, d);
  if (resolve_sampler_mode(d, options) == SamplerMode::exact_rejection)
    return sample_by_rejection(n, d, seed, options.max_retries);
  return sample_by_pairing(n, d, seed, options);
}

}  // namespace rrg

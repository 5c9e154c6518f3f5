#pragma once

#include <cstdint>

#include "detail/mutable_graph.hpp"
#include "rrglab/rng.hpp"

namespace rrg::detail {

/// Applies the switching of edges[a], edges[b] in place if it keeps g simple.
bool try_switch(MutableGraph& g, std::size_t a, std::size_t b, bool crossed);

/// Runs the lazy switching chain in place; returns the number of accepted moves.
std::uint64_t run_walk(MutableGraph& g, std::uint64_t steps, Rng& rng);

}  // namespace rrg::detail

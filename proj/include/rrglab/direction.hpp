#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace rrg {

enum class DirectionKind { coordinate_difference, random_orthogonal, d_supported };

std::string to_string(DirectionKind kind);
/// Accepts the to_string spellings; throws InvalidArgument otherwise.
DirectionKind parse_direction_kind(const std::string& text);

struct DirectionParams {
  /// Support size for d_supported.
  int support = 0;
  /// d_supported only: false keeps the raw equal-weight vector, which is not
  /// orthogonal to e.
  bool project = true;
};

/// Unit test vector q. Every kind except unprojected d_supported satisfies <q, e> = 0.
struct Direction {
  int n = 0;
  Eigen::VectorXd coords;
  DirectionKind kind = DirectionKind::coordinate_difference;
  std::vector<int> support;  ///< empty unless d_supported
  bool projected = true;

  /// Short descriptor for tables, e.g. "d-supported:4".
  std::string id() const;
};

/// coordinate-difference: (1, -1, 0, ...)/sqrt(2). random-orthogonal: Gaussian
/// fill, e projected out, normalized. d-supported: 1/sqrt(d) on the first d
/// coordinates, then (by default) projected off e and renormalized.
Direction build_direction(DirectionKind kind, int n, const DirectionParams& params, std::uint64_t seed);

/// Throws DirectionNotOrthogonal if |<q, e>| > tol.
void require_orthogonal(const Direction& q, double tol = 1e-12);

}  // namespace rrg

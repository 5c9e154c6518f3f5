#include "rrglab/direction.hpp"

#include <cmath>

#include "rrglab/error.hpp"
#include "rrglab/rng.hpp"

namespace rrg {

std::string to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::coordinate_difference: return "coordinate-difference";
    case DirectionKind::random_orthogonal: return "random-orthogonal";
    case DirectionKind::d_supported: return "d-supported";
  }
  return "unknown";
}

DirectionKind parse_direction_kind(const std::string& text) {
  for (auto kind : {DirectionKind::coordinate_difference, DirectionKind::random_orthogonal,
                    DirectionKind::d_supported})
    if (text == to_string(kind)) return kind;
  fail(ErrorKind::InvalidArgument, "unknown direction kind '" + text + "'");
}

std::string Direction::id() const {
  std::string out = to_string(kind);
  if (kind == DirectionKind::d_supported) {
    out += ":" + std::to_string(support.size());
    if (!projected) out += ":raw";
  }
  return out;
}

Direction build_direction(DirectionKind kind, int n, const DirectionParams& params, std::uint64_t seed) {
  if (n < 2) fail(ErrorKind::InvalidArgument, "direction needs n >= 2");
  Direction q;
  q.n = n;
  q.kind = kind;
  q.coords = Eigen::VectorXd::Zero(n);
  switch (kind) {
    case DirectionKind::coordinate_difference:
      q.coords[0] = 1.0 / std::sqrt(2.0);
      q.coords[1] = -q.coords[0];
      break;
    case DirectionKind::random_orthogonal: {
      Rng rng = make_rng(seed);
      std::normal_distribution<double> normal;
      for (auto& x : q.coords) x = normal(rng);
      q.coords.array() -= q.coords.mean();
      q.coords.normalize();
      // one more pass so <q, e> is at rounding level after normalization
      q.coords.array() -= q.coords.mean();
      q.coords.normalize();
      break;
    }
    case DirectionKind::d_supported: {
      const int d = params.support;
      if (d < 1 || d > n) fail(ErrorKind::BadSupport, "support size " + std::to_string(d) + " outside [1, n]");
      if (params.project && d == n) fail(ErrorKind::BadSupport, "full support projects to zero");
      for (int i = 0; i < d; ++i) {
        q.support.push_back(i);
        q.coords[i] = 1.0 / std::sqrt(static_cast<double>(d));
      }
      q.projected = params.project;
      if (params.project) {
        q.coords.array() -= q.coords.mean();
        q.coords.normalize();
      }
      break;
    }
  }
  return q;
}

void require_orthogonal(const Direction& q, double tol) {
  const double dot = q.coords.sum();
  if (std::abs(dot) > tol)
    fail(ErrorKind::DirectionNotOrthogonal, "|<q, e>| = " + std::to_string(std::abs(dot)));
}

}  // namespace rrg

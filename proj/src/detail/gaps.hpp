#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace rrg {

/// Flags values (descending) closer than tol to a neighbor; `next` is the
/// value following the last one, when known.
std::vector<bool> gap_flags_for(const Eigen::VectorXd& values, double tol, std::optional<double> next);

}  // namespace rrg

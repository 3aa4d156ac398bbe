#pragma once

#include "mta/types.hpp"

namespace mta {

inline constexpr double kDefaultRho = 0.3;
inline constexpr double kBandwidthFloor = 1e-12;

/// Squared per-view kernel bandwidths h_p^2.
struct BandwidthVector {
  Vector h_sq;
  double rho = kDefaultRho;
  double floor = kBandwidthFloor;
};

/// Size of each neighbour set: max(1, round(rho * (N - 1))), 0 when N == 1.
Index neighbor_count(Index n_views, double rho);

/// h_p^2 = (1 / (rho (N-1))) * sum of squared distances from f_p to its
/// neighbor_count() nearest other views (ties by lower index), clamped
/// below by kBandwidthFloor. A single view gets the floor.
BandwidthVector variable_bandwidth(const Matrix& views, double rho = kDefaultRho);

/// k_p = exp(-||f_p - mode||^2 / h_p^2), unnormalized so that k_p is in (0, 1].
Vector gaussian_kernel(const Matrix& views, const Vector& mode, const Vector& h_sq);

}  // namespace mta

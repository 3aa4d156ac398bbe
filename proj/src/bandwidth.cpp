#include "mta/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mta/errors.hpp"

namespace mta {

Index neighbor_count(Index n_views, double rho) {
  if (n_views <= 1) return 0;
  const auto rounded = static_cast<Index>(std::lround(rho * static_cast<double>(n_views - 1)));
  return std::clamp<Index>(rounded, 1, n_views - 1);
}

BandwidthVector variable_bandwidth(const Matrix& views, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ConfigError("rho must lie in (0, 1]");
  }
  const Index n = views.rows();
  BandwidthVector out;
  out.rho = rho;
  out.h_sq = Vector::Constant(n, kBandwidthFloor);
  if (n <= 1) return out;

  const Index k = neighbor_count(n, rho);
  const double scale = 1.0 / (rho * static_cast<double>(n - 1));

  Matrix dist_sq(n, n);
  for (Index p = 0; p < n; ++p) {
    dist_sq(p, p) = 0.0;
    for (Index q = p + 1; q < n; ++q) {
      const double d = (views.row(p) - views.row(q)).squaredNorm();
      dist_sq(p, q) = d;
      dist_sq(q, p) = d;
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n - 1));
  for (Index p = 0; p < n; ++p) {
    std::size_t slot = 0;
    for (Index q = 0; q < n; ++q) {
      if (q != p) order[slot++] = q;
    }
    const auto closer = [&](Index a, Index b) {
      return dist_sq(p, a) < dist_sq(p, b) || (dist_sq(p, a) == dist_sq(p, b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    double sum = 0.0;
    for (Index i = 0; i < k; ++i) sum += dist_sq(p, order[static_cast<std::size_t>(i)]);
    out.h_sq[p] = std::max(sum * scale, kBandwidthFloor);
  }
  return out;
}

Vector gaussian_kernel(const Matrix& views, const Vector& mode, const Vector& h_sq) {
  if (views.cols() != mode.size() || views.rows() != h_sq.size()) {
    throw DimensionMismatchError("kernel evaluation with inconsistent dimensions");
  }
  Vector out(views.rows());
  for (Index p = 0; p < views.rows(); ++p) {
    out[p] = std::exp(-(views.row(p).transpose() - mode).squaredNorm() / h_sq[p]);
  }
  return out;
}

}  // namespace mta

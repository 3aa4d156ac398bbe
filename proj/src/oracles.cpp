#include "mta/oracles.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mta/errors.hpp"

namespace mta {

GridOracleResult grid_oracle(const EmbeddingSet& views, const ClassEmbeddings& classes,
                             const Hyperparams& params, int resolution) {
  if (views.dim() != 2) {
    throw DimensionTooLargeError("grid oracle needs 2-D embeddings, got dimension " +
                                 std::to_string(views.dim()));
  }
  if (views.size() > kGridOracleMaxViews) throw ConfigError("grid oracle supports at most 8 views");
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");

  const Problem problem = build_problem(views, classes, params);
  const Matrix& f = problem.views;
  const double margin = std::sqrt(problem.bandwidth.h_sq.maxCoeff());
  const Vector lo = f.colwise().minCoeff().transpose().array() - margin;
  const Vector hi = f.colwise().maxCoeff().transpose().array() + margin;
  const Index n = problem.size();
  const Vector uniform = Vector::Constant(n, 1.0 / static_cast<double>(n));

  GridOracleResult best;
  best.minimum = std::numeric_limits<double>::infinity();
  best.resolution = resolution;
  Vector m(2);
  for (int i = 0; i < resolution; ++i) {
    m[0] = lo[0] + (hi[0] - lo[0]) * i / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      m[1] = lo[1] + (hi[1] - lo[1]) * j / (resolution - 1);
      const Vector kernels = gaussian_kernel(f, m, problem.bandwidth.h_sq);
      Vector y = uniform;
      if (params.filtering == Filtering::inlierness) {
        y = solve_y(kernels, problem.affinity.w, uniform, params).y;
      }
      const double value = objective_from_kernels(kernels, y, problem.affinity.w, params);
      if (value < best.minimum) {
        best.minimum = value;
        best.argmin = m;
      }
    }
  }
  return best;
}

StationarityReport stationarity_oracle(const EmbeddingSet& views, const ClassEmbeddings& classes,
                                       const Solution& solution, const Hyperparams& params,
                                       double step) {
  const Problem problem = build_problem(views, classes, params);
  StationarityReport report;
  const Index d = problem.dim();
  report.gradient.resize(d);
  Vector probe = solution.mode;
  for (Index i = 0; i < d; ++i) {
    probe[i] = solution.mode[i] + step;
    const double up = objective(problem, probe, solution.y, params);
    probe[i] = solution.mode[i] - step;
    const double down = objective(problem, probe, solution.y, params);
    probe[i] = solution.mode[i];
    report.gradient[i] = (up - down) / (2.0 * step);
  }
  report.gradient_norm = report.gradient.norm();

  const Vector kernels = gaussian_kernel(problem.views, solution.mode, problem.bandwidth.h_sq);
  const Vector again = cccp_y_update(kernels, problem.affinity.w, solution.y, params);
  report.y_residual = (again - solution.y).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace mta

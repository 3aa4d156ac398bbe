#pragma once

#include "mta/embedding.hpp"
#include "mta/solver.hpp"
#include "mta/types.hpp"

namespace mta {

inline constexpr Index kGridOracleMaxViews = 8;

struct GridOracleResult {
  double minimum = 0.0;
  Vector argmin;
  int resolution = 0;
};

/// Brute-force minimum of L(m, y*(m)) over a resolution x resolution grid
/// of modes covering the bounding box of the views, widened by the largest
/// bandwidth. y*(m) comes from solve_y started at uniform weights, i.e. the
/// solver's own y-phase. Only for d = 2 (DimensionTooLargeError) and
/// N <= 8 (ConfigError).
GridOracleResult grid_oracle(const EmbeddingSet& views, const ClassEmbeddings& classes,
                             const Hyperparams& params, int resolution = 200);

struct StationarityReport {
  Vector gradient;  // central finite differences of L w.r.t. m at the solution
  double gradient_norm = 0.0;
  double y_residual = 0.0;  // ||cccp_y_update(y*) - y*||_inf at m*
};

StationarityReport stationarity_oracle(const EmbeddingSet& views, const ClassEmbeddings& classes,
                                       const Solution& solution, const Hyperparams& params,
                                       double step = 1e-5);

}  // namespace mta

#include "mta/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mta/errors.hpp"

namespace mta {

void Hyperparams::validate() const {
  if (!(std::isfinite(lambda) && lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(std::isfinite(lambda_y) && lambda_y > 0.0)) {
    throw ConfigError("lambda_y must be > 0 (the entropy barrier keeps y inside the simplex)");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  if (max_inner_y < 1 || max_inner_m < 1 || max_outer < 1) {
    throw ConfigError("iteration caps must be >= 1");
  }
}

std::string_view to_string(Filtering filtering) {
  switch (filtering) {
    case Filtering::inlierness:
      return "inlierness";
    case Filtering::uniform:
      return "uniform";
    case Filtering::confidence_threshold:
      return "confidence_threshold";
  }
  return "?";
}

std::string_view to_string(ModeUpdate update) {
  return update == ModeUpdate::bandwidth_scaled ? "bandwidth_scaled" : "literal";
}

Filtering parse_filtering(std::string_view text) {
  if (text == "inlierness") return Filtering::inlierness;
  if (text == "uniform") return Filtering::uniform;
  if (text == "confidence_threshold") return Filtering::confidence_threshold;
  throw ConfigError("unknown filtering '" + std::string(text) + "'");
}

ModeUpdate parse_mode_update(std::string_view text) {
  if (text == "bandwidth_scaled" || text == "scaled") return ModeUpdate::bandwidth_scaled;
  if (text == "literal") return ModeUpdate::literal;
  throw ConfigError("unknown mode update '" + std::string(text) + "' (expected scaled|literal)");
}

bool SolverFlags::any() const {
  return y_max_iterations || y_cycle || m_max_iterations || outer_max_iterations ||
         degenerate_simplex || vanishing_weights;
}

std::vector<std::string> SolverFlags::names() const {
  std::vector<std::string> out;
  if (y_max_iterations) out.emplace_back("y_max_iterations");
  if (y_cycle) out.emplace_back("y_cycle");
  if (m_max_iterations) out.emplace_back("m_max_iterations");
  if (outer_max_iterations) out.emplace_back("outer_max_iterations");
  if (degenerate_simplex) out.emplace_back("degenerate_simplex");
  if (vanishing_weights) out.emplace_back("vanishing_weights");
  return out;
}

void SolverFlags::merge(const SolverFlags& other) {
  y_max_iterations |= other.y_max_iterations;
  y_cycle |= other.y_cycle;
  m_max_iterations |= other.m_max_iterations;
  outer_max_iterations |= other.outer_max_iterations;
  degenerate_simplex |= other.degenerate_simplex;
  vanishing_weights |= other.vanishing_weights;
}

std::vector<double> ConvergenceTrace::objective_trajectory() const {
  std::vector<double> out;
  out.reserve(outer.size());
  for (const auto& rec : outer) out.push_back(rec.objective);
  return out;
}

int ConvergenceTrace::total_y_iterations() const {
  int total = 0;
  for (const auto& rec : outer) total += rec.y_iterations;
  return total;
}

int ConvergenceTrace::total_m_iterations() const {
  int total = 0;
  for (const auto& rec : outer) total += rec.m_iterations;
  return total;
}

Problem build_problem(const EmbeddingSet& views, const ClassEmbeddings& classes,
                      const Hyperparams& params) {
  params.validate();
  Problem problem;
  problem.views = views.views();
  problem.original_index = views.original_index();
  problem.affinity = build_affinity(params.affinity, params.diagonal, views, classes);
  problem.bandwidth = variable_bandwidth(problem.views, params.rho);
  return problem;
}

double entropy(const Vector& y) {
  double h = 0.0;
  for (Index p = 0; p < y.size(); ++p) {
    if (y[p] > 0.0) h -= y[p] * std::log(y[p]);
  }
  return h;
}

double objective_from_kernels(const Vector& kernels, const Vector& y, const Matrix& w,
                              const Hyperparams& params) {
  const double density = y.dot(kernels);
  const double coupling = y.dot(w * y);
  return -density - 0.5 * params.lambda * coupling - params.lambda_y * entropy(y);
}

double objective(const Matrix& views, const Vector& mode, const Vector& y, const Matrix& w,
                 const Vector& h_sq, const Hyperparams& params) {
  return objective_from_kernels(gaussian_kernel(views, mode, h_sq), y, w, params);
}

double objective(const Problem& problem, const Vector& mode, const Vector& y,
                 const Hyperparams& params) {
  return objective(problem.views, mode, y, problem.affinity.w, problem.bandwidth.h_sq, params);
}

Vector cccp_y_update(const Vector& kernels, const Matrix& w, const Vector& y_prev,
                     const Hyperparams& params, bool* degenerate) {
  const Index n = kernels.size();
  Vector z = (kernels + params.lambda * (w * y_prev)) / params.lambda_y;
  z.array() -= z.maxCoeff();
  Vector y = z.array().exp();
  const double total = y.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    if (degenerate) *degenerate = true;
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
  }
  if (degenerate) *degenerate = false;
  return y / total;
}

namespace {

bool on_simplex(const Vector& y) {
  if (std::abs(y.sum() - 1.0) > kSimplexTolerance) return false;
  return (y.array() >= -kSimplexTolerance).all() && (y.array() <= 1.0 + kSimplexTolerance).all();
}

}  // namespace

YSolveResult solve_y(const Vector& kernels, const Matrix& w, const Vector& y_init,
                     const Hyperparams& params, ConvergenceTrace* trace, SolveObserver* observer,
                     const Vector* mode) {
  YSolveResult result;
  Vector y = y_init;
  Vector two_back;
  bool have_two_back = false;
  double current_objective = trace ? objective_from_kernels(kernels, y, w, params) : 0.0;

  for (int it = 1; it <= params.max_inner_y; ++it) {
    bool degenerate = false;
    Vector next = cccp_y_update(kernels, w, y, params, &degenerate);
    result.degenerate |= degenerate;

    if (trace) {
      if (!on_simplex(next)) ++trace->simplex_violations;
      const double next_objective = objective_from_kernels(kernels, next, w, params);
      const double increase = next_objective - current_objective;
      if (increase > kDescentTolerance) ++trace->descent_violations;
      trace->max_descent_increase = std::max(trace->max_descent_increase, increase);
      current_objective = next_objective;
    }
    if (observer && mode) observer->on_y_step(*mode, y, next);

    const double step = (next - y).cwiseAbs().maxCoeff();
    if (have_two_back && step >= params.epsilon &&
        (next - two_back).cwiseAbs().maxCoeff() < params.epsilon) {
      result.cycled = true;
    }
    two_back = std::move(y);
    have_two_back = true;
    y = std::move(next);
    result.iterations = it;
    if (step < params.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.y = std::move(y);
  return result;
}

Vector fixed_point_m_update(const Matrix& views, const Vector& y, const Vector& m_prev,
                            const Vector& h_sq, ModeUpdate update, bool* vanishing) {
  Vector weights = y.cwiseProduct(gaussian_kernel(views, m_prev, h_sq));
  if (update == ModeUpdate::bandwidth_scaled) weights = weights.cwiseQuotient(h_sq);
  const double total = weights.sum();
  if (!(total >= kVanishingDenominator)) {
    if (vanishing) *vanishing = true;
    return m_prev;
  }
  if (vanishing) *vanishing = false;
  return views.transpose() * (weights / total);
}

MSolveResult solve_m(const Matrix& views, const Vector& y, const Vector& m_init,
                     const Vector& h_sq, const Hyperparams& params, SolveObserver* observer) {
  MSolveResult result;
  Vector m = m_init;
  result.u_values.push_back(y.dot(gaussian_kernel(views, m, h_sq)));
  if (params.record_trajectory) result.trajectory.push_back(m);

  for (int it = 1; it <= params.max_inner_m; ++it) {
    bool vanishing = false;
    Vector next = fixed_point_m_update(views, y, m, h_sq, params.mode_update, &vanishing);
    result.vanishing |= vanishing;
    if (observer) observer->on_m_step(y, m, next);
    const double step = (next - m).norm();
    m = std::move(next);
    result.iterations = it;
    result.u_values.push_back(y.dot(gaussian_kernel(views, m, h_sq)));
    if (params.record_trajectory) result.trajectory.push_back(m);
    if (step < params.epsilon || vanishing) {
      result.converged = !vanishing;
      break;
    }
  }
  result.mode = std::move(m);
  return result;
}

MSolveResult classic_meanshift(const Matrix& views, const Vector& m_init, const Vector& h_sq,
                               const Hyperparams& params) {
  const Index n = views.rows();
  return solve_m(views, Vector::Constant(n, 1.0 / static_cast<double>(n)), m_init, h_sq, params);
}

Solution mta_solve(const Problem& problem, const Hyperparams& params, SolveObserver* observer) {
  return mta_solve_from(problem, problem.views.row(problem.original_index).transpose(), params,
                        observer);
}

Solution mta_solve_from(const Problem& problem, const Vector& initial_mode,
                        const Hyperparams& params, SolveObserver* observer) {
  params.validate();
  if (initial_mode.size() != problem.dim()) {
    throw DimensionMismatchError("initial mode dimension does not match the views");
  }
  if (params.filtering == Filtering::confidence_threshold) {
    throw ConfigError("confidence-threshold filtering needs class embeddings; use the "
                      "EmbeddingSet overload");
  }
  const Index n = problem.size();
  const Matrix& views = problem.views;
  const Vector& h_sq = problem.bandwidth.h_sq;
  const Matrix& w = problem.affinity.w;

  Solution sol;
  ConvergenceTrace& trace = sol.trace;
  Vector m = initial_mode;
  Vector y = Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (params.record_trajectory) trace.modes.push_back(m);

  bool last_y_converged = true;
  bool last_m_converged = true;
  for (int outer = 0; outer < params.max_outer; ++outer) {
    const Vector y_before = y;
    const Vector m_before = m;
    OuterIteration rec;

    if (params.filtering == Filtering::inlierness) {
      const Vector kernels = gaussian_kernel(views, m, h_sq);
      YSolveResult ys = solve_y(kernels, w, y, params, &trace, observer, &m);
      y = std::move(ys.y);
      rec.y_iterations = ys.iterations;
      last_y_converged = ys.converged;
      rec.y_converged = ys.converged;
      trace.flags.y_max_iterations |= !ys.converged;
      trace.flags.y_cycle |= ys.cycled;
      trace.flags.degenerate_simplex |= ys.degenerate;
    }

    MSolveResult ms = solve_m(views, y, m, h_sq, params, observer);
    m = std::move(ms.mode);
    rec.m_iterations = ms.iterations;
    last_m_converged = ms.converged;
    rec.m_converged = ms.converged;
    trace.flags.m_max_iterations |= !ms.converged && !ms.vanishing;
    trace.flags.vanishing_weights |= ms.vanishing;
    for (std::size_t l = 1; l < ms.u_values.size(); ++l) {
      if (ms.u_values[l] < ms.u_values[l - 1] - kMonotonicityTolerance) {
        ++trace.monotonicity_violations;
      }
    }
    trace.u_values.push_back(std::move(ms.u_values));
    if (params.record_trajectory) {
      for (std::size_t l = 1; l < ms.trajectory.size(); ++l) {
        trace.modes.push_back(std::move(ms.trajectory[l]));
      }
    }

    rec.objective = objective(problem, m, y, params);
    rec.step_y = (y - y_before).cwiseAbs().maxCoeff();
    rec.step_m = (m - m_before).norm();
    trace.outer.push_back(rec);
    if (rec.step_y < params.epsilon && rec.step_m < params.epsilon) {
      trace.converged = last_y_converged && last_m_converged;
      break;
    }
    if (outer + 1 == params.max_outer) trace.flags.outer_max_iterations = true;
  }

  sol.mode = std::move(m);
  sol.y = std::move(y);
  return sol;
}

std::vector<Index> most_confident_views(const PredictionMatrix& preds, double fraction) {
  const Index n = preds.probs.rows();
  std::vector<double> neg_confidence(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) {
    neg_confidence[static_cast<std::size_t>(p)] = entropy(preds.probs.row(p).transpose());
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return neg_confidence[static_cast<std::size_t>(a)] <
           neg_confidence[static_cast<std::size_t>(b)];
  });
  // The small offset keeps e.g. 0.3 * 10 = 3.0000000000000004 from rounding up.
  auto keep = static_cast<Index>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  keep = std::clamp<Index>(keep, 1, n);
  order.resize(static_cast<std::size_t>(keep));
  return order;
}

Solution mta_solve(const EmbeddingSet& views, const ClassEmbeddings& classes,
                   const Hyperparams& params, SolveObserver* observer) {
  params.validate();
  if (params.filtering != Filtering::confidence_threshold) {
    return mta_solve(build_problem(views, classes, params), params, observer);
  }

  // Ranked by confidence; the most confident kept view seeds the mode unless
  // the original image survives the cut.
  std::vector<Index> ranked = most_confident_views(softmax_predictions(views, classes),
                                                   params.fraction);
  const Index most_confident = ranked.front();
  std::vector<Index> kept = ranked;
  std::sort(kept.begin(), kept.end());
  const auto find_pos = [&](Index row) {
    return static_cast<Index>(std::find(kept.begin(), kept.end(), row) - kept.begin());
  };
  Index seed = find_pos(views.original_index());
  if (seed == static_cast<Index>(kept.size())) seed = find_pos(most_confident);

  Hyperparams sub_params = params;
  sub_params.filtering = Filtering::uniform;
  const EmbeddingSet subset = views.select(kept, seed);
  Solution sub = mta_solve(build_problem(subset, classes, sub_params), sub_params, observer);

  Solution sol;
  sol.mode = std::move(sub.mode);
  sol.trace = std::move(sub.trace);
  sol.y = Vector::Zero(views.size());
  for (std::size_t i = 0; i < kept.size(); ++i) sol.y[kept[i]] = sub.y[static_cast<Index>(i)];
  return sol;
}

}  // namespace mta

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mta/affinity.hpp"
#include "mta/bandwidth.hpp"
#include "mta/embedding.hpp"
#include "mta/types.hpp"

namespace mta {

/// How view weights are chosen during the solve.
///  - inlierness: y is optimized jointly with the mode.
///  - uniform: y is pinned to 1/N (plain MeanShift from the original view).
///  - confidence_threshold: only the most confident `fraction` of views are
///    kept, each with equal weight.
enum class Filtering { inlierness, uniform, confidence_threshold };

/// Weights used by the mode fixed-point map.
///  - bandwidth_scaled: y_p k_p / h_p^2. Its fixed points are exactly the
///    stationary points of the objective when bandwidths differ per view.
///  - literal: y_p k_p. Same map when all h_p are equal.
enum class ModeUpdate { bandwidth_scaled, literal };

struct Hyperparams {
  double lambda = 4.0;
  double lambda_y = 0.2;
  double rho = kDefaultRho;
  double epsilon = 1e-6;
  int max_inner_y = 100;
  int max_inner_m = 100;
  int max_outer = 20;
  AffinityKind affinity = AffinityKind::text;
  DiagonalMode diagonal = DiagonalMode::zeroed;
  Filtering filtering = Filtering::inlierness;
  double fraction = 0.1;  // only read for Filtering::confidence_threshold
  ModeUpdate mode_update = ModeUpdate::bandwidth_scaled;
  bool record_trajectory = false;  // keep every mode iterate in the trace

  /// Throws ConfigError on lambda < 0, lambda_y <= 0, epsilon <= 0,
  /// rho outside (0, 1], fraction outside (0, 1] or caps < 1.
  void validate() const;
};

std::string_view to_string(Filtering filtering);
std::string_view to_string(ModeUpdate update);
Filtering parse_filtering(std::string_view text);
ModeUpdate parse_mode_update(std::string_view text);

/// Non-fatal solver conditions. A solve never throws on these.
struct SolverFlags {
  bool y_max_iterations = false;
  bool y_cycle = false;  // period-2 oscillation detected in a y-phase
  bool m_max_iterations = false;
  bool outer_max_iterations = false;
  bool degenerate_simplex = false;
  bool vanishing_weights = false;

  bool any() const;
  std::vector<std::string> names() const;
  void merge(const SolverFlags& other);
};

struct OuterIteration {
  int y_iterations = 0;
  int m_iterations = 0;
  double objective = 0.0;
  double step_y = 0.0;  // max-norm change of y over the whole outer iteration
  double step_m = 0.0;  // L2 change of m over the whole outer iteration
  bool y_converged = true;  // also true when the y-phase is skipped
  bool m_converged = false;
};

struct ConvergenceTrace {
  std::vector<OuterIteration> outer;
  /// u^l = sum_p y_p k_p(m^l) for every iterate of every m-phase.
  std::vector<std::vector<double>> u_values;
  /// Every mode iterate, starting with the initial mode (record_trajectory).
  std::vector<Vector> modes;
  /// CCCP steps where the objective rose by more than kDescentTolerance.
  int descent_violations = 0;
  double max_descent_increase = 0.0;
  /// u-sequence decreases larger than kMonotonicityTolerance.
  int monotonicity_violations = 0;
  /// y iterates off the simplex by more than kSimplexTolerance.
  int simplex_violations = 0;
  SolverFlags flags;
  bool converged = false;

  std::vector<double> objective_trajectory() const;
  int total_y_iterations() const;
  int total_m_iterations() const;
};

inline constexpr double kDescentTolerance = 1e-8;
inline constexpr double kMonotonicityTolerance = 1e-12;
inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kVanishingDenominator = 1e-300;

/// Optional per-iteration hook; tests use it to check invariants on every
/// iterate independently of the solver's own bookkeeping.
class SolveObserver {
 public:
  virtual ~SolveObserver() = default;
  virtual void on_y_step(const Vector& /*mode*/, const Vector& /*y_prev*/,
                         const Vector& /*y_next*/) {}
  virtual void on_m_step(const Vector& /*y*/, const Vector& /*m_prev*/,
                         const Vector& /*m_next*/) {}
};

/// Everything that is fixed for one sample before iterating: the views, the
/// affinity matrix and the bandwidths.
struct Problem {
  Matrix views;
  Index original_index = 0;
  AffinityMatrix affinity;
  BandwidthVector bandwidth;

  Index size() const { return views.rows(); }
  Index dim() const { return views.cols(); }
};

Problem build_problem(const EmbeddingSet& views, const ClassEmbeddings& classes,
                      const Hyperparams& params);

/// H(y) = -sum y_p ln y_p with 0 ln 0 = 0.
double entropy(const Vector& y);

/// L = -sum y_p k_p - (lambda / 2) y^T W y - lambda_y H(y).
double objective_from_kernels(const Vector& kernels, const Vector& y, const Matrix& w,
                              const Hyperparams& params);

double objective(const Matrix& views, const Vector& mode, const Vector& y, const Matrix& w,
                 const Vector& h_sq, const Hyperparams& params);

double objective(const Problem& problem, const Vector& mode, const Vector& y,
                 const Hyperparams& params);

/// One CCCP step: y_p <- softmax_p((k_p + lambda (W y_prev)_p) / lambda_y).
/// Sets `degenerate` (if given) and returns uniform weights when the
/// stabilized exponentials still sum to zero.
Vector cccp_y_update(const Vector& kernels, const Matrix& w, const Vector& y_prev,
                     const Hyperparams& params, bool* degenerate = nullptr);

struct YSolveResult {
  Vector y;
  int iterations = 0;
  bool converged = false;
  bool cycled = false;
  bool degenerate = false;
};

/// Iterates cccp_y_update from `y_init` until the max-norm step drops below
/// epsilon or max_inner_y is reached. When `trace` is given, simplex and
/// descent checks are recorded there (needs `mode` for the observer only).
YSolveResult solve_y(const Vector& kernels, const Matrix& w, const Vector& y_init,
                     const Hyperparams& params, ConvergenceTrace* trace = nullptr,
                     SolveObserver* observer = nullptr, const Vector* mode = nullptr);

/// One mode update m <- sum omega_p f_p / sum omega_p. Returns `m_prev` and
/// sets `vanishing` when the weights sum below kVanishingDenominator.
Vector fixed_point_m_update(const Matrix& views, const Vector& y, const Vector& m_prev,
                            const Vector& h_sq, ModeUpdate update = ModeUpdate::bandwidth_scaled,
                            bool* vanishing = nullptr);

struct MSolveResult {
  Vector mode;
  int iterations = 0;
  bool converged = false;
  bool vanishing = false;
  std::vector<double> u_values;  // u^0 .. u^L
  std::vector<Vector> trajectory;  // m^0 .. m^L, when requested
};

/// Iterates fixed_point_m_update until ||m^l - m^{l-1}|| < epsilon or
/// max_inner_m. Always performs at least one update.
MSolveResult solve_m(const Matrix& views, const Vector& y, const Vector& m_init,
                     const Vector& h_sq, const Hyperparams& params,
                     SolveObserver* observer = nullptr);

struct Solution {
  Vector mode;
  Vector y;  // length N, on the simplex
  ConvergenceTrace trace;
};

/// Block-coordinate MTA solve: m starts at the original view, y at 1/N;
/// alternates a y-phase and an m-phase until both move less than epsilon
/// across a full outer iteration. Never throws on non-convergence.
///
/// For Filtering::confidence_threshold the solve runs with uniform weights
/// on the kept subset; the returned y is uniform over that subset and zero
/// elsewhere.
Solution mta_solve(const EmbeddingSet& views, const ClassEmbeddings& classes,
                   const Hyperparams& params, SolveObserver* observer = nullptr);

/// Same as above on a prepared problem (filtering must not be
/// confidence_threshold, which needs the class embeddings to rank views).
Solution mta_solve(const Problem& problem, const Hyperparams& params,
                   SolveObserver* observer = nullptr);

/// mta_solve on a prepared problem with the mode started at `initial_mode`
/// instead of the original view.
Solution mta_solve_from(const Problem& problem, const Vector& initial_mode,
                        const Hyperparams& params, SolveObserver* observer = nullptr);

/// Mode-seeking MeanShift with every view weighted 1/N.
MSolveResult classic_meanshift(const Matrix& views, const Vector& m_init, const Vector& h_sq,
                               const Hyperparams& params);

/// Indices of the ceil(fraction * N) views with the lowest prediction
/// entropy, most confident first (ties by lower index).
std::vector<Index> most_confident_views(const PredictionMatrix& preds, double fraction);

}  // namespace mta

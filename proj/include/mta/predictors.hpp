#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mta/embedding.hpp"
#include "mta/solver.hpp"
#include "mta/types.hpp"

namespace mta {

enum class Method { mta, meanshift, threshold, mean, zeroshot };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct TraceSummary {
  int outer_iterations = 0;
  int y_iterations = 0;
  int m_iterations = 0;
  double objective = 0.0;
  std::vector<double> objective_trajectory;
  SolverFlags flags;
  bool converged = false;
  int descent_violations = 0;
};

TraceSummary summarize(const ConvergenceTrace& trace);

struct PredictionReport {
  Index predicted_class = 0;
  std::string class_name;
  Vector similarities;  // cosine similarity of the representation with each t_k
  std::string method;
  std::optional<Vector> inlierness;
  std::optional<TraceSummary> trace;
  /// Per-class vote counts; only set by ensemble_vote.
  std::optional<std::vector<int>> votes;
  double wall_time_ms = 0.0;
};

/// Index of the largest entry; the lowest index wins exact ties.
Index argmax_lowest(const Vector& values);

/// Normalizes the mode and predicts argmax_k m_hat . t_k.
/// Throws ZeroVectorError when ||mode|| < 1e-12.
PredictionReport predict_from_mode(const Vector& mode, const ClassEmbeddings& classes);

/// Plurality vote over per-prompt-set reports. Ties go to the class with the
/// larger summed similarity across sets, then to the lower index. The
/// returned similarities are the per-class means across sets.
PredictionReport ensemble_vote(std::span<const PredictionReport> reports);

PredictionReport baseline_mean(const EmbeddingSet& views, const ClassEmbeddings& classes);

/// Zero-shot prediction from the original (non-augmented) view only.
PredictionReport baseline_zeroshot(const EmbeddingSet& views, const ClassEmbeddings& classes);

/// MeanShift over the ceil(fraction * N) lowest-entropy views.
PredictionReport baseline_confidence_threshold(const EmbeddingSet& views,
                                               const ClassEmbeddings& classes, double fraction,
                                               const Hyperparams& params);

PredictionReport baseline_uniform_meanshift(const EmbeddingSet& views,
                                            const ClassEmbeddings& classes,
                                            const Hyperparams& params);

/// Full MTA: joint mode / inlierness solve, then predict from the mode.
PredictionReport predict_mta(const EmbeddingSet& views, const ClassEmbeddings& classes,
                             const Hyperparams& params);

/// Runs `method`; fills wall_time_ms.
PredictionReport predict(Method method, const EmbeddingSet& views,
                         const ClassEmbeddings& classes, const Hyperparams& params);

}  // namespace mta

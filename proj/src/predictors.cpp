#include "mta/predictors.hpp"

#include <chrono>
#include <string>

#include "mta/errors.hpp"

namespace mta {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::mta:
      return "mta";
    case Method::meanshift:
      return "meanshift";
    case Method::threshold:
      return "threshold";
    case Method::mean:
      return "mean";
    case Method::zeroshot:
      return "zeroshot";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "mta") return Method::mta;
  if (text == "meanshift") return Method::meanshift;
  if (text == "threshold") return Method::threshold;
  if (text == "mean") return Method::mean;
  if (text == "zeroshot") return Method::zeroshot;
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected mta|meanshift|threshold|mean|zeroshot)");
}

TraceSummary summarize(const ConvergenceTrace& trace) {
  TraceSummary out;
  out.outer_iterations = static_cast<int>(trace.outer.size());
  out.y_iterations = trace.total_y_iterations();
  out.m_iterations = trace.total_m_iterations();
  out.objective_trajectory = trace.objective_trajectory();
  out.objective = out.objective_trajectory.empty() ? 0.0 : out.objective_trajectory.back();
  out.flags = trace.flags;
  out.converged = trace.converged;
  out.descent_violations = trace.descent_violations;
  return out;
}

Index argmax_lowest(const Vector& values) {
  Index best = 0;
  for (Index k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

PredictionReport predict_from_mode(const Vector& mode, const ClassEmbeddings& classes) {
  if (mode.size() != classes.dim()) {
    throw DimensionMismatchError("mode dimension does not match class embeddings");
  }
  const double norm = mode.norm();
  if (!(norm >= kMinRowNorm)) throw ZeroVectorError("mode has norm below 1e-12");
  PredictionReport report;
  report.similarities = classes.classes() * (mode / norm);
  report.predicted_class = argmax_lowest(report.similarities);
  report.class_name = classes.name(report.predicted_class);
  return report;
}

PredictionReport ensemble_vote(std::span<const PredictionReport> reports) {
  if (reports.empty()) throw InconsistentClassesError("ensemble vote over zero reports");
  const Index n_classes = reports.front().similarities.size();
  std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
  Vector similarity_sum = Vector::Zero(n_classes);
  for (const auto& report : reports) {
    if (report.similarities.size() != n_classes || report.predicted_class < 0 ||
        report.predicted_class >= n_classes) {
      throw InconsistentClassesError("ensemble reports disagree on the number of classes");
    }
    ++votes[static_cast<std::size_t>(report.predicted_class)];
    similarity_sum += report.similarities;
  }

  Index winner = 0;
  for (Index k = 1; k < n_classes; ++k) {
    const int vk = votes[static_cast<std::size_t>(k)];
    const int vw = votes[static_cast<std::size_t>(winner)];
    if (vk > vw || (vk == vw && similarity_sum[k] > similarity_sum[winner])) winner = k;
  }

  PredictionReport out;
  out.predicted_class = winner;
  out.class_name = reports.front().class_name;
  for (const auto& report : reports) {
    if (report.predicted_class == winner) {
      out.class_name = report.class_name;
      break;
    }
  }
  out.similarities = similarity_sum / static_cast<double>(reports.size());
  out.method = reports.front().method;
  out.votes = std::move(votes);
  return out;
}

PredictionReport baseline_mean(const EmbeddingSet& views, const ClassEmbeddings& classes) {
  PredictionReport report =
      predict_from_mode(views.views().colwise().mean().transpose(), classes);
  report.method = "mean";
  return report;
}

PredictionReport baseline_zeroshot(const EmbeddingSet& views, const ClassEmbeddings& classes) {
  PredictionReport report =
      predict_from_mode(views.view(views.original_index()).transpose(), classes);
  report.method = "zeroshot";
  return report;
}

namespace {

PredictionReport report_from_solution(Solution sol, const ClassEmbeddings& classes,
                                      std::string method) {
  PredictionReport report = predict_from_mode(sol.mode, classes);
  report.method = std::move(method);
  report.trace = summarize(sol.trace);
  report.inlierness = std::move(sol.y);
  return report;
}

}  // namespace

PredictionReport baseline_confidence_threshold(const EmbeddingSet& views,
                                               const ClassEmbeddings& classes, double fraction,
                                               const Hyperparams& params) {
  Hyperparams p = params;
  p.filtering = Filtering::confidence_threshold;
  p.fraction = fraction;
  return report_from_solution(mta_solve(views, classes, p), classes, "threshold");
}

PredictionReport baseline_uniform_meanshift(const EmbeddingSet& views,
                                            const ClassEmbeddings& classes,
                                            const Hyperparams& params) {
  Hyperparams p = params;
  p.filtering = Filtering::uniform;
  return report_from_solution(mta_solve(views, classes, p), classes, "meanshift");
}

PredictionReport predict_mta(const EmbeddingSet& views, const ClassEmbeddings& classes,
                             const Hyperparams& params) {
  Hyperparams p = params;
  p.filtering = Filtering::inlierness;
  return report_from_solution(mta_solve(views, classes, p), classes, "mta");
}

PredictionReport predict(Method method, const EmbeddingSet& views,
                         const ClassEmbeddings& classes, const Hyperparams& params) {
  const auto start = std::chrono::steady_clock::now();
  PredictionReport report;
  switch (method) {
    case Method::mta:
      report = predict_mta(views, classes, params);
      break;
    case Method::meanshift:
      report = baseline_uniform_meanshift(views, classes, params);
      break;
    case Method::threshold:
      report = baseline_confidence_threshold(views, classes, params.fraction, params);
      break;
    case Method::mean:
      report = baseline_mean(views, classes);
      break;
    case Method::zeroshot:
      report = baseline_zeroshot(views, classes);
      break;
  }
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace mta

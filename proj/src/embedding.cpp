#include "mta/embedding.hpp"

#include <cmath>
#include <string>

#include "mta/errors.hpp"

namespace mta {

Matrix l2_normalize(const Matrix& matrix) {
  if (!matrix.allFinite()) {
    throw NonFiniteError("matrix contains non-finite entries");
  }
  Matrix out = matrix;
  for (Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm < kMinRowNorm) {
      throw ZeroVectorError("row " + std::to_string(r) + " has norm below 1e-12");
    }
    out.row(r) /= norm;
  }
  return out;
}

EmbeddingSet::EmbeddingSet(Matrix views, Index original_index)
    : views_(std::move(views)), original_index_(original_index) {
  if (views_.rows() < 1 || views_.cols() < 1) {
    throw DimensionMismatchError("an embedding set needs at least one view of dimension >= 1");
  }
  if (original_index_ < 0 || original_index_ >= views_.rows()) {
    throw DimensionMismatchError("original index " + std::to_string(original_index_) +
                                 " out of range for " + std::to_string(views_.rows()) +
                                 " views");
  }
  views_ = l2_normalize(views_);
}

EmbeddingSet EmbeddingSet::select(const std::vector<Index>& rows, Index original_index) const {
  Matrix subset(static_cast<Index>(rows.size()), dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    subset.row(static_cast<Index>(i)) = views_.row(rows[i]);
  }
  return EmbeddingSet(std::move(subset), original_index);
}

ClassEmbeddings::ClassEmbeddings(Matrix classes, double temperature,
                                 std::vector<std::string> names)
    : classes_(std::move(classes)), temperature_(temperature), names_(std::move(names)) {
  if (classes_.rows() < 2 || classes_.cols() < 1) {
    throw DimensionMismatchError("need at least two classes of dimension >= 1");
  }
  if (!std::isfinite(temperature_) || temperature_ <= 0.0) {
    throw ConfigError("temperature must be finite and positive");
  }
  classes_ = l2_normalize(classes_);
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(classes_.rows()));
    for (Index k = 0; k < classes_.rows(); ++k) names_.push_back("class_" + std::to_string(k));
  } else if (static_cast<Index>(names_.size()) != classes_.rows()) {
    throw InconsistentClassesError("got " + std::to_string(names_.size()) + " class names for " +
                                   std::to_string(classes_.rows()) + " classes");
  }
}

Matrix row_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const double shift = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - shift).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

PredictionMatrix softmax_predictions(const EmbeddingSet& views, const ClassEmbeddings& classes) {
  if (views.dim() != classes.dim()) {
    throw DimensionMismatchError("view dimension " + std::to_string(views.dim()) +
                                 " != class dimension " + std::to_string(classes.dim()));
  }
  const Matrix logits = classes.temperature() * (views.views() * classes.classes().transpose());
  return PredictionMatrix{row_softmax(logits)};
}

}  // namespace mta

#pragma once

#include <string>
#include <vector>

#include "mta/types.hpp"

namespace mta {

/// Logit scale used when a bundle does not record one (standard CLIP value).
inline constexpr double kDefaultTemperature = 100.0;

/// Rows with a norm below this are rejected by l2_normalize.
inline constexpr double kMinRowNorm = 1e-12;

/// Returns a copy of `matrix` with every row scaled to unit L2 norm.
/// Throws NonFiniteError on NaN/Inf entries and ZeroVectorError on
/// (near-)zero rows.
Matrix l2_normalize(const Matrix& matrix);

/// The N augmented-view embeddings of one test image. Rows are always unit
/// norm: the constructor re-normalizes whatever it is given.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(Matrix views, Index original_index = 0);

  const Matrix& views() const { return views_; }
  Index size() const { return views_.rows(); }
  Index dim() const { return views_.cols(); }
  Index original_index() const { return original_index_; }
  auto view(Index p) const { return views_.row(p); }

  /// Subset of rows in the given order; `original_index` refers to the
  /// position inside `rows`.
  EmbeddingSet select(const std::vector<Index>& rows, Index original_index) const;

 private:
  Matrix views_;
  Index original_index_;
};

/// Class text embeddings t_k together with the logit scale.
class ClassEmbeddings {
 public:
  ClassEmbeddings(Matrix classes, double temperature = kDefaultTemperature,
                  std::vector<std::string> names = {});

  const Matrix& classes() const { return classes_; }
  Index size() const { return classes_.rows(); }
  Index dim() const { return classes_.cols(); }
  double temperature() const { return temperature_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(Index k) const { return names_[static_cast<std::size_t>(k)]; }

 private:
  Matrix classes_;
  double temperature_;
  std::vector<std::string> names_;
};

/// Per-view softmax predictions over the classes (rows sum to one).
struct PredictionMatrix {
  Matrix probs;
};

/// Row-wise softmax of `logits` with max-subtraction.
Matrix row_softmax(const Matrix& logits);

/// s_{p,k} = softmax_k(tau * f_p . t_k).
PredictionMatrix softmax_predictions(const EmbeddingSet& views, const ClassEmbeddings& classes);

}  // namespace mta

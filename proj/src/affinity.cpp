#include "mta/affinity.hpp"

#include <string>

#include "mta/errors.hpp"

namespace mta {

AffinityMatrix gram_affinity(const Matrix& rows, DiagonalMode diagonal_mode) {
  const Index n = rows.rows();
  AffinityMatrix out{Matrix(n, n), diagonal_mode};
  // Fill one triangle and mirror it so symmetry is exact, not just up to
  // rounding in the matrix product.
  for (Index p = 0; p < n; ++p) {
    out.w(p, p) = diagonal_mode == DiagonalMode::zeroed ? 0.0 : rows.row(p).squaredNorm();
    for (Index q = p + 1; q < n; ++q) {
      const double value = rows.row(p).dot(rows.row(q));
      out.w(p, q) = value;
      out.w(q, p) = value;
    }
  }
  return out;
}

AffinityMatrix text_affinity(const PredictionMatrix& preds, DiagonalMode diagonal_mode) {
  return gram_affinity(preds.probs, diagonal_mode);
}

AffinityMatrix vision_affinity(const EmbeddingSet& views, DiagonalMode diagonal_mode) {
  return gram_affinity(views.views(), diagonal_mode);
}

AffinityMatrix build_affinity(AffinityKind kind, DiagonalMode diagonal_mode,
                              const EmbeddingSet& views, const ClassEmbeddings& classes) {
  if (kind == AffinityKind::vision) return vision_affinity(views, diagonal_mode);
  return text_affinity(softmax_predictions(views, classes), diagonal_mode);
}

std::string_view to_string(DiagonalMode mode) {
  return mode == DiagonalMode::zeroed ? "zeroed" : "kept";
}

std::string_view to_string(AffinityKind kind) {
  return kind == AffinityKind::text ? "text" : "vision";
}

DiagonalMode parse_diagonal_mode(std::string_view text) {
  if (text == "zeroed") return DiagonalMode::zeroed;
  if (text == "kept") return DiagonalMode::kept;
  throw ConfigError("unknown diagonal mode '" + std::string(text) + "' (expected zeroed|kept)");
}

AffinityKind parse_affinity_kind(std::string_view text) {
  if (text == "text") return AffinityKind::text;
  if (text == "vision") return AffinityKind::vision;
  throw ConfigError("unknown affinity '" + std::string(text) + "' (expected text|vision)");
}

}  // namespace mta

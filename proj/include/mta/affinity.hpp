#pragma once

#include <string_view>

#include "mta/embedding.hpp"
#include "mta/types.hpp"

namespace mta {

/// `zeroed` sets w_pp = 0 (self-affinity removed); `kept` leaves the Gram
/// diagonal in place, which keeps W positive semi-definite.
enum class DiagonalMode { zeroed, kept };

enum class AffinityKind { text, vision };

struct AffinityMatrix {
  Matrix w;  // N x N, exactly symmetric
  DiagonalMode diagonal_mode = DiagonalMode::zeroed;
};

/// Builds the symmetric Gram matrix of the rows of `rows` (w_pq = r_p . r_q)
/// with the requested diagonal handling.
AffinityMatrix gram_affinity(const Matrix& rows, DiagonalMode diagonal_mode);

/// w_pq = s_p . s_q over the softmax predictions.
AffinityMatrix text_affinity(const PredictionMatrix& preds, DiagonalMode diagonal_mode);

/// w_pq = f_p . f_q over the raw visual features.
AffinityMatrix vision_affinity(const EmbeddingSet& views, DiagonalMode diagonal_mode);

/// Dispatches on `kind`; text affinities need the class embeddings.
AffinityMatrix build_affinity(AffinityKind kind, DiagonalMode diagonal_mode,
                              const EmbeddingSet& views, const ClassEmbeddings& classes);

std::string_view to_string(DiagonalMode mode);
std::string_view to_string(AffinityKind kind);
DiagonalMode parse_diagonal_mode(std::string_view text);
AffinityKind parse_affinity_kind(std::string_view text);

}  // namespace mta

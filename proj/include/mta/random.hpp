#pragma once

#include <cstdint>
#include <random>

#include "mta/types.hpp"

namespace mta {

/// Deterministic random source: std::mt19937_64 seeded through
/// std::seed_seq from (seed, stream). Both the engine and seed_seq are
/// fully specified by the standard, and the uniform / normal transforms
/// below are implemented here instead of using <random> distributions,
/// whose output differs between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent substream `stream` of the same seed.
  Rng split(std::uint64_t stream) const { return Rng(seed_, stream); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// n independent standard normals.
  Vector normal_vector(Index n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mta

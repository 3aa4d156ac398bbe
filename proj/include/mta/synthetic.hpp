#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mta/embedding.hpp"
#include "mta/predictors.hpp"
#include "mta/solver.hpp"
#include "mta/types.hpp"

namespace mta {

enum class OutlierMode { uniform_sphere, wrong_class };

std::string_view to_string(OutlierMode mode);
OutlierMode parse_outlier_mode(std::string_view text);

/// Synthetic test-time-augmentation scene. Noise scales are total norms:
/// a noise vector is sigma * g / sqrt(dim) with g standard normal.
struct SceneConfig {
  std::uint64_t seed = 0;
  Index dim = 32;
  Index n_classes = 10;
  Index n_views = 64;
  double inlier_noise = 1.5;
  double outlier_fraction = 0.3;
  OutlierMode outlier_mode = OutlierMode::wrong_class;
  /// Spread of wrong_class outliers around the distractor prototype. A
  /// value below inlier_noise makes the outliers a tight, confidently
  /// mispredicted cluster. Negative means "same as inlier_noise".
  double outlier_noise = 0.5;
  double text_noise = 1.0;
  double temperature = kDefaultTemperature;

  void validate() const;
  double effective_outlier_noise() const {
    return outlier_noise < 0.0 ? inlier_noise : outlier_noise;
  }
};

struct Scene {
  EmbeddingSet views;
  ClassEmbeddings classes;
  Index true_label = 0;
  Index distractor = -1;  // wrong_class outliers sit near this prototype
  std::vector<bool> inlier;
};

/// Scene `stream` of config.seed. View 0 is always an inlier (the original
/// image); the other positions are shuffled.
Scene generate_scene(const SceneConfig& config, std::uint64_t stream = 0);

/// Size ranges for the random-instance generator used by property suites.
struct InstanceRanges {
  Index min_views = 2;
  Index max_views = 64;
  Index min_dim = 2;
  Index max_dim = 64;
  Index min_classes = 2;
  Index max_classes = 20;
};

/// Scene with sizes drawn from `ranges` and noise levels, outlier fraction
/// and outlier mode drawn at random. Deterministic in (seed, index).
Scene random_instance(std::uint64_t seed, std::uint64_t index, const InstanceRanges& ranges = {});

struct MethodStats {
  Method method = Method::mta;
  int trials = 0;
  int correct = 0;
  double accuracy = 0.0;
  double ci_low = 0.0;  // 95% Wilson score interval
  double ci_high = 0.0;
  double mean_inlier_mass = 0.0;  // mean sum of y over planted inliers
  double mean_outer_iterations = 0.0;
  double mean_y_iterations = 0.0;
  double mean_m_iterations = 0.0;
  int flagged_trials = 0;
  double wall_time_ms = 0.0;
};

struct TrialOutcome {
  Index predicted = 0;
  bool correct = false;
  double inlier_mass = 0.0;
};

struct TrialRecord {
  int trial = 0;
  Index true_label = 0;
  std::vector<TrialOutcome> outcomes;  // parallel to BenchResult::methods
};

struct BenchResult {
  SceneConfig config;
  Hyperparams params;
  int trials = 0;
  std::vector<MethodStats> methods;
  std::vector<TrialRecord> per_trial;
  double wall_time_ms = 0.0;
};

/// 95% Wilson score interval for `successes` out of `trials`.
std::pair<double, double> wilson_interval(int successes, int trials);

/// Runs every method on `trials` scenes (scene t is stream t of
/// config.seed). Results do not depend on `jobs`.
BenchResult run_benchmark(const SceneConfig& config, std::span<const Method> methods, int trials,
                          const Hyperparams& params, int jobs = 1);

}  // namespace mta

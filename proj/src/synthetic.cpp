#include "mta/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "mta/errors.hpp"
#include "mta/parallel.hpp"
#include "mta/random.hpp"

namespace mta {

std::string_view to_string(OutlierMode mode) {
  return mode == OutlierMode::wrong_class ? "wrong_class" : "uniform_sphere";
}

OutlierMode parse_outlier_mode(std::string_view text) {
  if (text == "wrong_class") return OutlierMode::wrong_class;
  if (text == "uniform_sphere") return OutlierMode::uniform_sphere;
  throw ConfigError("unknown outlier mode '" + std::string(text) +
                    "' (expected wrong_class|uniform_sphere)");
}

void SceneConfig::validate() const {
  if (dim < 1) throw ConfigError("scene dim must be >= 1");
  if (n_classes < 2) throw ConfigError("scene needs at least two classes");
  if (n_views < 1) throw ConfigError("scene needs at least one view");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw ConfigError("outlier fraction must lie in [0, 1)");
  }
  if (!(inlier_noise >= 0.0) || !(text_noise >= 0.0) || !std::isfinite(inlier_noise) ||
      !std::isfinite(text_noise) || !std::isfinite(outlier_noise)) {
    throw ConfigError("noise levels must be finite and non-negative");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be finite and positive");
  }
}

namespace {

Vector unit(Vector v) {
  const double n = v.norm();
  // A zero draw has probability zero; fall back to the first axis.
  if (n < kMinRowNorm) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

Vector perturbed(const Vector& center, double sigma, Rng& rng) {
  const auto d = center.size();
  return unit(center + (sigma / std::sqrt(static_cast<double>(d))) * rng.normal_vector(d));
}

}  // namespace

Scene generate_scene(const SceneConfig& config, std::uint64_t stream) {
  config.validate();
  Rng rng(config.seed, stream);
  const Index d = config.dim;
  const Index k = config.n_classes;
  const Index n = config.n_views;

  Matrix prototypes(k, d);
  for (Index c = 0; c < k; ++c) prototypes.row(c) = unit(rng.normal_vector(d)).transpose();
  const auto true_label = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
  Index distractor = -1;
  if (config.outlier_mode == OutlierMode::wrong_class) {
    distractor = (true_label + 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k - 1)))) % k;
  }

  const auto n_out = static_cast<Index>(std::floor(config.outlier_fraction * static_cast<double>(n)));
  std::vector<bool> inlier(static_cast<std::size_t>(n), true);
  for (Index i = n - n_out; i < n; ++i) inlier[static_cast<std::size_t>(i)] = false;
  // Fisher-Yates over positions 1..n-1; position 0 stays the original view.
  for (Index i = n - 1; i > 1; --i) {
    const auto j = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(i)));
    const bool tmp = inlier[static_cast<std::size_t>(i)];
    inlier[static_cast<std::size_t>(i)] = inlier[static_cast<std::size_t>(j)];
    inlier[static_cast<std::size_t>(j)] = tmp;
  }

  const Vector true_proto = prototypes.row(true_label).transpose();
  Matrix views(n, d);
  for (Index p = 0; p < n; ++p) {
    Vector v;
    if (inlier[static_cast<std::size_t>(p)]) {
      v = perturbed(true_proto, config.inlier_noise, rng);
    } else if (config.outlier_mode == OutlierMode::wrong_class) {
      v = perturbed(prototypes.row(distractor).transpose(), config.effective_outlier_noise(), rng);
    } else {
      v = unit(rng.normal_vector(d));
    }
    views.row(p) = v.transpose();
  }

  Matrix text(k, d);
  for (Index c = 0; c < k; ++c) {
    text.row(c) = perturbed(prototypes.row(c).transpose(), config.text_noise, rng).transpose();
  }

  return Scene{EmbeddingSet(std::move(views), 0), ClassEmbeddings(std::move(text), config.temperature),
               true_label, distractor, std::move(inlier)};
}

Scene random_instance(std::uint64_t seed, std::uint64_t index, const InstanceRanges& ranges) {
  Rng rng(seed, index);
  const auto pick = [&rng](Index lo, Index hi) {
    return lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  SceneConfig config;
  config.n_views = pick(ranges.min_views, ranges.max_views);
  config.dim = pick(ranges.min_dim, ranges.max_dim);
  config.n_classes = pick(ranges.min_classes, ranges.max_classes);
  config.inlier_noise = 0.2 + 1.3 * rng.uniform();
  config.outlier_fraction = 0.4 * rng.uniform();
  config.outlier_mode = rng.uniform() < 0.5 ? OutlierMode::wrong_class : OutlierMode::uniform_sphere;
  config.outlier_noise = config.inlier_noise * (0.3 + 0.7 * rng.uniform());
  config.text_noise = rng.uniform();
  config.seed = rng.below(~std::uint64_t{0});
  return generate_scene(config, 0);
}

std::pair<double, double> wilson_interval(int successes, int trials) {
  if (trials <= 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = trials;
  const double phat = successes / n;
  const double denom = 1.0 + z * z / n;
  const double center = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

BenchResult run_benchmark(const SceneConfig& config, std::span<const Method> methods, int trials,
                          const Hyperparams& params, int jobs) {
  if (trials < 1) throw ConfigError("benchmark needs at least one trial");
  if (methods.empty()) throw ConfigError("benchmark needs at least one method");
  config.validate();
  params.validate();
  const auto start = std::chrono::steady_clock::now();

  const std::size_t n_methods = methods.size();
  BenchResult result;
  result.config = config;
  result.params = params;
  result.trials = trials;
  result.per_trial.resize(static_cast<std::size_t>(trials));
  std::vector<std::vector<PredictionReport>> reports(static_cast<std::size_t>(trials));

  parallel_for(static_cast<std::size_t>(trials), jobs, [&](std::size_t t) {
    const Scene scene = generate_scene(config, t);
    TrialRecord& rec = result.per_trial[t];
    rec.trial = static_cast<int>(t);
    rec.true_label = scene.true_label;
    rec.outcomes.resize(n_methods);
    reports[t].resize(n_methods);
    for (std::size_t i = 0; i < n_methods; ++i) {
      PredictionReport report = predict(methods[i], scene.views, scene.classes, params);
      TrialOutcome& out = rec.outcomes[i];
      out.predicted = report.predicted_class;
      out.correct = report.predicted_class == scene.true_label;
      if (report.inlierness) {
        for (std::size_t p = 0; p < scene.inlier.size(); ++p) {
          if (scene.inlier[p]) out.inlier_mass += (*report.inlierness)[static_cast<Index>(p)];
        }
      }
      reports[t][i] = std::move(report);
    }
  });

  for (std::size_t i = 0; i < n_methods; ++i) {
    MethodStats stats;
    stats.method = methods[i];
    stats.trials = trials;
    for (int t = 0; t < trials; ++t) {
      const auto ti = static_cast<std::size_t>(t);
      const TrialOutcome& out = result.per_trial[ti].outcomes[i];
      const PredictionReport& report = reports[ti][i];
      stats.correct += out.correct ? 1 : 0;
      stats.mean_inlier_mass += out.inlier_mass;
      if (report.trace) {
        stats.mean_outer_iterations += report.trace->outer_iterations;
        stats.mean_y_iterations += report.trace->y_iterations;
        stats.mean_m_iterations += report.trace->m_iterations;
        stats.flagged_trials += report.trace->flags.any() ? 1 : 0;
      }
      stats.wall_time_ms += report.wall_time_ms;
    }
    stats.accuracy = static_cast<double>(stats.correct) / trials;
    std::tie(stats.ci_low, stats.ci_high) = wilson_interval(stats.correct, trials);
    stats.mean_inlier_mass /= trials;
    stats.mean_outer_iterations /= trials;
    stats.mean_y_iterations /= trials;
    stats.mean_m_iterations /= trials;
    result.methods.push_back(stats);
  }
  result.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace mta

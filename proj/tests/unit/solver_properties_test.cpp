// Randomized invariants of the solver on generated instances.
#include <cmath>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "mta/predictors.hpp"
#include "mta/random.hpp"
#include "mta/solver.hpp"
#include "mta/synthetic.hpp"

namespace mta {
namespace {

constexpr std::uint64_t kSeed = 20240611;

class InvariantObserver : public SolveObserver {
 public:
  void on_y_step(const Vector&, const Vector&, const Vector& y_next) override {
    ++y_steps;
    if (std::abs(y_next.sum() - 1.0) > 1e-9 || y_next.minCoeff() < 0.0 || y_next.maxCoeff() > 1.0) {
      ++simplex_failures;
    }
  }
  void on_m_step(const Vector&, const Vector&, const Vector& m_next) override {
    // unit-norm views: any convex combination lies in the unit ball
    if (m_next.norm() > 1.0 + 1e-12) ++hull_failures;
  }
  int y_steps = 0;
  int simplex_failures = 0;
  int hull_failures = 0;
};

Matrix random_rotation(Index d, Rng& rng) {
  Matrix g(d, d);
  for (Index r = 0; r < d; ++r) g.row(r) = rng.normal_vector(d).transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ();
}

TEST(SolverProperties, SimplexAndHullOnEveryIterate) {
  for (DiagonalMode diag : {DiagonalMode::zeroed, DiagonalMode::kept}) {
    Hyperparams p;
    p.diagonal = diag;
    for (std::uint64_t i = 0; i < 40; ++i) {
      const Scene s = random_instance(kSeed, i);
      InvariantObserver obs;
      const Solution sol = mta_solve(s.views, s.classes, p, &obs);
      EXPECT_GT(obs.y_steps, 0);
      EXPECT_EQ(obs.simplex_failures, 0) << "instance " << i;
      EXPECT_EQ(obs.hull_failures, 0) << "instance " << i;
      EXPECT_EQ(sol.trace.simplex_violations, 0);
      EXPECT_NEAR(sol.y.sum(), 1.0, 1e-9);
    }
  }
}

TEST(SolverProperties, USequenceMonotone) {
  const Hyperparams p;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const Scene s = random_instance(kSeed + 1, i);
    const Solution sol = mta_solve(s.views, s.classes, p);
    EXPECT_EQ(sol.trace.monotonicity_violations, 0) << "instance " << i;
    for (const auto& phase : sol.trace.u_values) {
      for (double u : phase) EXPECT_LE(u, 1.0 + 1e-15);
    }
  }
}

TEST(SolverProperties, StrictModeDescent) {
  Hyperparams p;
  p.diagonal = DiagonalMode::kept;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const Scene s = random_instance(kSeed + 2, i);
    const Solution sol = mta_solve(s.views, s.classes, p);
    EXPECT_EQ(sol.trace.descent_violations, 0)
        << "instance " << i << " max increase " << sol.trace.max_descent_increase;
  }
}

TEST(SolverProperties, UniformFilteringIsClassicMeanShift) {
  Hyperparams p;
  p.filtering = Filtering::uniform;
  p.record_trajectory = true;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Scene s = random_instance(kSeed + 3, i);
    const Problem problem = build_problem(s.views, s.classes, p);
    const Solution sol = mta_solve(problem, p);
    const MSolveResult ms = classic_meanshift(
        problem.views, problem.views.row(problem.original_index).transpose(),
        problem.bandwidth.h_sq, p);
    ASSERT_LE(ms.trajectory.size(), sol.trace.modes.size());
    for (std::size_t l = 0; l < ms.trajectory.size(); ++l) {
      EXPECT_LT((ms.trajectory[l] - sol.trace.modes[l]).norm(), 1e-10);
    }
  }
}

TEST(SolverProperties, ThresholdWithFullFractionIsUniform) {
  Hyperparams uniform;
  uniform.filtering = Filtering::uniform;
  Hyperparams threshold;
  threshold.filtering = Filtering::confidence_threshold;
  threshold.fraction = 1.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Scene s = random_instance(kSeed + 4, i);
    const Solution a = mta_solve(s.views, s.classes, uniform);
    const Solution b = mta_solve(s.views, s.classes, threshold);
    EXPECT_LT((a.mode - b.mode).norm(), 1e-10);
    EXPECT_LT((a.y - b.y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SolverProperties, RotationEquivariance) {
  Hyperparams p;
  p.diagonal = DiagonalMode::kept;
  Rng rng(kSeed + 5);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Scene s = random_instance(kSeed + 5, i);
    const Matrix q = random_rotation(s.views.dim(), rng);
    const EmbeddingSet views(s.views.views() * q.transpose(), s.views.original_index());
    const ClassEmbeddings classes(s.classes.classes() * q.transpose(), s.classes.temperature());
    const Solution a = mta_solve(s.views, s.classes, p);
    const Solution b = mta_solve(views, classes, p);
    EXPECT_LT((q * a.mode - b.mode).norm(), 1e-8) << "instance " << i;
    EXPECT_LT((a.y - b.y).cwiseAbs().maxCoeff(), 1e-8) << "instance " << i;
  }
}

TEST(SolverProperties, PermutationEquivariance) {
  Hyperparams p;
  p.diagonal = DiagonalMode::kept;
  Rng rng(kSeed + 6);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Scene s = random_instance(kSeed + 6, i);
    const Index n = s.views.size();
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) perm[static_cast<std::size_t>(k)] = k;
    for (Index k = n - 1; k > 0; --k) {
      const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k + 1)));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(j)]);
    }
    Index new_original = 0;
    for (Index k = 0; k < n; ++k) {
      if (perm[static_cast<std::size_t>(k)] == s.views.original_index()) new_original = k;
    }
    const EmbeddingSet permuted = s.views.select(perm, new_original);
    const Solution a = mta_solve(s.views, s.classes, p);
    const Solution b = mta_solve(permuted, s.classes, p);
    EXPECT_LT((a.mode - b.mode).norm(), 1e-8) << "instance " << i;
    for (Index k = 0; k < n; ++k) {
      EXPECT_NEAR(b.y[k], a.y[perm[static_cast<std::size_t>(k)]], 1e-8);
    }
  }
}

TEST(SolverProperties, KktResidualAtConvergedSolution) {
  Hyperparams p;
  p.diagonal = DiagonalMode::kept;
  p.max_outer = 200;
  int converged = 0;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const Scene s = random_instance(kSeed + 7, i);
    const Solution sol = mta_solve(s.views, s.classes, p);
    if (!sol.trace.converged) continue;
    ++converged;
    const Problem problem = build_problem(s.views, s.classes, p);
    const Vector k = gaussian_kernel(problem.views, sol.mode, problem.bandwidth.h_sq);
    const Vector y_new = cccp_y_update(k, problem.affinity.w, sol.y, p);
    EXPECT_LT((y_new - sol.y).cwiseAbs().maxCoeff(), 10.0 * p.epsilon) << "instance " << i;
  }
  EXPECT_GE(converged, 30);
}

TEST(SolverProperties, PredictionScaleInvariant) {
  const Hyperparams p;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Scene s = random_instance(kSeed + 8, i);
    const Solution sol = mta_solve(s.views, s.classes, p);
    const PredictionReport a = predict_from_mode(sol.mode, s.classes);
    const PredictionReport b = predict_from_mode(7.0 * sol.mode, s.classes);
    EXPECT_EQ(a.predicted_class, b.predicted_class);
    EXPECT_LT((a.similarities - b.similarities).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SolverProperties, PlantedOutliersAreDownWeighted) {
  SceneConfig c;
  c.outlier_fraction = 0.2;
  c.outlier_mode = OutlierMode::uniform_sphere;
  c.inlier_noise = 0.5;
  const Hyperparams p;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const Scene s = generate_scene(c, t);
    const Solution sol = mta_solve(s.views, s.classes, p);
    Vector inlier_centroid = Vector::Zero(s.views.dim());
    double mass = 0.0;
    int inliers = 0;
    for (Index q = 0; q < s.views.size(); ++q) {
      if (!s.inlier[static_cast<std::size_t>(q)]) continue;
      mass += sol.y[q];
      inlier_centroid += s.views.view(q).transpose();
      ++inliers;
    }
    inlier_centroid /= inliers;
    const Vector all_centroid = s.views.views().colwise().mean().transpose();
    EXPECT_GE(mass, 0.8) << "scene " << t;
    EXPECT_LT((sol.mode - inlier_centroid).norm(), (sol.mode - all_centroid).norm());
  }
}

TEST(SolverProperties, ClassOrderDoesNotMatter) {
  const Hyperparams p;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Scene s = random_instance(kSeed + 9, i);
    const Matrix reversed = s.classes.classes().colwise().reverse();
    const Solution a = mta_solve(s.views, s.classes, p);
    const Solution b = mta_solve(s.views, ClassEmbeddings(reversed, s.classes.temperature()), p);
    EXPECT_LT((a.y - b.y).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.mode - b.mode).norm(), 1e-10);
  }
}

}  // namespace
}  // namespace mta

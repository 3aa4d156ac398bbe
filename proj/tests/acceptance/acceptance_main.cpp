// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Diagnostics follow each line, indented.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "mta/cli.hpp"
#include "mta/oracles.hpp"
#include "mta/predictors.hpp"
#include "mta/random.hpp"
#include "mta/solver.hpp"
#include "mta/synthetic.hpp"

namespace {

using namespace mta;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class SimplexObserver : public SolveObserver {
 public:
  void on_y_step(const Vector&, const Vector&, const Vector& y) override {
    ++checked;
    worst_sum = std::max(worst_sum, std::abs(y.sum() - 1.0));
    if (std::abs(y.sum() - 1.0) > 1e-9 || y.minCoeff() < 0.0 || y.maxCoeff() > 1.0) ++failures;
  }
  long checked = 0;
  long failures = 0;
  double worst_sum = 0.0;
};

Outcome a1_simplex() {
  const auto start = Clock::now();
  const Hyperparams params;
  SimplexObserver obs;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const Scene s = random_instance(1001, i);
    const Solution sol = mta_solve(s.views, s.classes, params, &obs);
    obs.on_y_step(sol.mode, sol.y, sol.y);
  }
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = obs.failures == 0 && secs < 30.0;
  o.summary = format("simplex: %ld y iterates checked, %ld off-simplex, %.1f s (limit 30 s)",
                     obs.checked, obs.failures, secs);
  o.details.push_back(format("largest |sum(y) - 1| = %.2e", obs.worst_sum));
  return o;
}

Outcome a2_monotonicity() {
  const Hyperparams params;
  long phases = 0, converged_phases = 0, violations = 0;
  double worst_drop = 0.0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const Scene s = random_instance(1002, i);
    const Solution sol = mta_solve(s.views, s.classes, params);
    for (std::size_t k = 0; k < sol.trace.outer.size(); ++k) {
      ++phases;
      converged_phases += sol.trace.outer[k].m_converged ? 1 : 0;
      const auto& u = sol.trace.u_values[k];
      for (std::size_t l = 1; l < u.size(); ++l) {
        worst_drop = std::max(worst_drop, u[l - 1] - u[l]);
        if (u[l] < u[l - 1] - 1e-12) ++violations;
      }
    }
  }
  const double rate = static_cast<double>(converged_phases) / static_cast<double>(phases);
  Outcome o;
  o.pass = violations == 0 && rate >= 0.99;
  o.summary = format("monotonicity: %ld u decreases in %ld m-phases; %.2f%% of phases converged "
                     "within 100 iterations (need 99%%)",
                     violations, phases, 100.0 * rate);
  o.details.push_back(format("largest u drop = %.2e (tolerance 1e-12)", worst_drop));
  return o;
}

Outcome a3_descent() {
  Hyperparams strict;
  strict.diagonal = DiagonalMode::kept;
  Hyperparams zeroed;
  long strict_violations = 0, zeroed_violations = 0;
  int zeroed_instances = 0;
  double strict_worst = 0.0, zeroed_worst = 0.0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const Scene s = random_instance(1003, i);
    const Solution a = mta_solve(s.views, s.classes, strict);
    strict_violations += a.trace.descent_violations;
    strict_worst = std::max(strict_worst, a.trace.max_descent_increase);
    const Solution b = mta_solve(s.views, s.classes, zeroed);
    zeroed_violations += b.trace.descent_violations;
    zeroed_instances += b.trace.descent_violations > 0 ? 1 : 0;
    zeroed_worst = std::max(zeroed_worst, b.trace.max_descent_increase);
  }
  Outcome o;
  o.pass = strict_violations == 0;
  o.summary = format("CCCP descent (kept diagonal): %ld steps rose by more than 1e-8 over 500 "
                     "instances; largest rise %.2e",
                     strict_violations, strict_worst);
  o.details.push_back(format("zeroed diagonal (reported only): %ld rising steps in %d/500 "
                             "instances; largest rise %.3g",
                             zeroed_violations, zeroed_instances, zeroed_worst));
  return o;
}

Outcome a4_reduction() {
  Hyperparams params;
  params.filtering = Filtering::uniform;
  params.record_trajectory = true;
  double worst = 0.0;
  int short_trajectories = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Scene s = random_instance(1004, i);
    const Problem problem = build_problem(s.views, s.classes, params);
    const Solution sol = mta_solve(problem, params);
    const MSolveResult ms =
        classic_meanshift(problem.views, problem.views.row(problem.original_index).transpose(),
                          problem.bandwidth.h_sq, params);
    if (ms.trajectory.size() > sol.trace.modes.size()) {
      ++short_trajectories;
      continue;
    }
    for (std::size_t l = 0; l < ms.trajectory.size(); ++l) {
      worst = std::max(worst, (ms.trajectory[l] - sol.trace.modes[l]).norm());
    }
  }
  Outcome o;
  o.pass = worst <= 1e-10 && short_trajectories == 0;
  o.summary = format("reduction: uniform filtering vs classic MeanShift, largest per-iterate "
                     "distance %.2e over 100 instances (limit 1e-10)",
                     worst);
  return o;
}

Outcome a5_stationarity() {
  // Strict mode: with the diagonal kept every y-phase is a descent method and
  // has a genuine fixed point to test against.
  Hyperparams params;
  params.diagonal = DiagonalMode::kept;
  InstanceRanges ranges;
  ranges.max_dim = 32;
  int accepted = 0, drawn = 0, grad_fail = 0, y_fail = 0;
  double worst_grad = 0.0, worst_y = 0.0;
  for (std::uint64_t i = 0; accepted < 200 && i < 5000; ++i) {
    ++drawn;
    const Scene s = random_instance(1005, i, ranges);
    const Solution sol = mta_solve(s.views, s.classes, params);
    if (!sol.trace.converged) continue;
    ++accepted;
    const StationarityReport st = stationarity_oracle(s.views, s.classes, sol, params);
    worst_grad = std::max(worst_grad, st.gradient_norm);
    worst_y = std::max(worst_y, st.y_residual);
    grad_fail += st.gradient_norm > 1e-4 ? 1 : 0;
    y_fail += st.y_residual > 1e-5 ? 1 : 0;
  }
  Outcome o;
  o.pass = accepted == 200 && grad_fail == 0 && y_fail == 0;
  o.summary = format("stationarity (kept diagonal): %d converged instances, max |grad_m L| = "
                     "%.2e (limit 1e-4), max y residual = %.2e (limit 1e-5)",
                     accepted, worst_grad, worst_y);
  o.details.push_back(format("%d of %d drawn instances converged within the default caps",
                             accepted, drawn));
  if (grad_fail + y_fail > 0) {
    o.details.push_back(format("%d gradient failures, %d residual failures", grad_fail, y_fail));
  }
  return o;
}

struct GridRun {
  int pass = 0;
  int total = 0;
  double worst_gap = -1e300;
  int restarted_pass = 0;  // failures that pass once restarted at the oracle argmin
  std::vector<std::string> failures;
};

GridRun grid_suite(const Hyperparams& params) {
  InstanceRanges ranges;
  ranges.min_dim = ranges.max_dim = 2;
  ranges.max_views = kGridOracleMaxViews;
  GridRun run;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Scene s = random_instance(1006, i, ranges);
    const Problem problem = build_problem(s.views, s.classes, params);
    const Solution sol = mta_solve(problem, params);
    const double obj = objective(problem, sol.mode, sol.y, params);
    const GridOracleResult g = grid_oracle(s.views, s.classes, params, 200);
    const double gap = obj - g.minimum;
    ++run.total;
    run.worst_gap = std::max(run.worst_gap, gap);
    if (gap <= 1e-3) {
      ++run.pass;
      continue;
    }
    const Solution again = mta_solve_from(problem, g.argmin, params);
    const double obj_again = objective(problem, again.mode, again.y, params);
    const bool fixed = obj_again <= g.minimum + 1e-3;
    run.restarted_pass += fixed ? 1 : 0;
    run.failures.push_back(format(
        "instance %llu (N=%lld): objective %.5f vs grid %.5f (gap %.4f, converged %s); "
        "restarted at the grid argmin: %.5f",
        static_cast<unsigned long long>(i), static_cast<long long>(s.views.size()), obj,
        g.minimum, gap, sol.trace.converged ? "yes" : "no", obj_again));
  }
  return run;
}

Outcome a6_grid() {
  Hyperparams strict;
  strict.diagonal = DiagonalMode::kept;
  const GridRun kept = grid_suite(strict);
  const GridRun zeroed = grid_suite(Hyperparams{});
  Outcome o;
  o.pass = kept.pass == kept.total;
  o.summary = format("grid oracle (kept diagonal): %d/%d instances within 1e-3 of the 200x200 "
                     "grid minimum; largest gap %.4f",
                     kept.pass, kept.total, kept.worst_gap);
  o.details.push_back(format("%d/%zu failing instances reach the grid minimum when the solver is "
                             "restarted at the grid argmin (local minima, not solver error)",
                             kept.restarted_pass, kept.failures.size()));
  for (const auto& f : kept.failures) o.details.push_back(f);
  o.details.push_back(format("zeroed diagonal (reported only): %d/%d within 1e-3; largest gap "
                             "%.4f; %d/%zu recover when restarted",
                             zeroed.pass, zeroed.total, zeroed.worst_gap, zeroed.restarted_pass,
                             zeroed.failures.size()));
  return o;
}

Outcome a7_ordering() {
  const auto start = Clock::now();
  const SceneConfig config;  // K=10, N=64, 30% wrong_class outliers
  const std::vector<Method> methods = {Method::mta, Method::meanshift, Method::mean,
                                       Method::threshold, Method::zeroshot};
  const BenchResult r = run_benchmark(config, methods, 500, Hyperparams{}, 1);
  const double secs = seconds_since(start);
  const double mta = r.methods[0].accuracy, ms = r.methods[1].accuracy,
               mean = r.methods[2].accuracy, thr = r.methods[3].accuracy;
  Outcome o;
  o.pass = mta >= ms + 0.05 && mta >= mean + 0.05 && mta >= thr && secs < 300.0;
  o.summary = format("ordering over 500 scenes: MTA %.3f, MeanShift %.3f, mean %.3f, threshold "
                     "10%% %.3f; %.1f s (limit 300 s)",
                     mta, ms, mean, thr, secs);
  for (const auto& m : r.methods) {
    o.details.push_back(format("%-10s accuracy %.3f [%.3f, %.3f], inlier mass %.3f",
                               std::string(to_string(m.method)).c_str(), m.accuracy, m.ci_low,
                               m.ci_high, m.mean_inlier_mass));
  }
  return o;
}

Outcome a8_lambda_y_trend() {
  const std::vector<double> grid = {0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 10.0, 100.0};
  SceneConfig config;
  config.seed = 8;
  constexpr int kScenes = 20;
  std::vector<Scene> scenes;
  for (int t = 0; t < kScenes; ++t) scenes.push_back(generate_scene(config, static_cast<std::uint64_t>(t)));
  const double log_n = std::log(static_cast<double>(config.n_views));

  std::vector<double> mean_entropy;
  for (double ly : grid) {
    Hyperparams p;
    p.lambda = 4.0;
    p.lambda_y = ly;
    double total = 0.0;
    for (const auto& s : scenes) total += entropy(mta_solve(s.views, s.classes, p).y);
    mean_entropy.push_back(total / kScenes);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < mean_entropy.size(); ++i) {
    monotone &= mean_entropy[i] >= mean_entropy[i - 1];
  }
  const bool low = mean_entropy.front() < 0.1 * log_n;
  const bool high = mean_entropy.back() > 0.9 * log_n;
  Outcome o;
  o.pass = monotone && low && high;
  o.summary = format("lambda_y trend: H(y*) %s; H at 0.01 = %.3f (need < %.3f), H at 100 = %.3f "
                     "(need > %.3f)",
                     monotone ? "non-decreasing" : "NOT monotone", mean_entropy.front(),
                     0.1 * log_n, mean_entropy.back(), 0.9 * log_n);
  std::ostringstream row;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    row << (i ? ", " : "") << grid[i] << ": " << format("%.4f", mean_entropy[i]);
  }
  o.details.push_back("mean H(y*) over " + std::to_string(kScenes) + " scenes: " + row.str());
  return o;
}

Outcome a9_invariance() {
  const Hyperparams params;
  Rng rng(1009);
  double rot_worst = 0.0, perm_worst = 0.0, scale_worst = 0.0;
  int class_changes = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Scene s = random_instance(1009, i);
    const Index d = s.views.dim();
    Matrix g(d, d);
    for (Index r = 0; r < d; ++r) g.row(r) = rng.normal_vector(d).transpose();
    const Matrix q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    const Solution a = mta_solve(s.views, s.classes, params);
    const Solution b =
        mta_solve(EmbeddingSet(s.views.views() * q.transpose(), s.views.original_index()),
                  ClassEmbeddings(s.classes.classes() * q.transpose(), s.classes.temperature()),
                  params);
    rot_worst = std::max({rot_worst, (q * a.mode - b.mode).norm(),
                          (a.y - b.y).cwiseAbs().maxCoeff()});
  }
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Scene s = random_instance(1109, i);
    const Index n = s.views.size();
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) perm[static_cast<std::size_t>(k)] = k;
    for (Index k = n - 1; k > 0; --k) {
      const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(k + 1)));
      std::swap(perm[static_cast<std::size_t>(k)], perm[j]);
    }
    const auto at = std::find(perm.begin(), perm.end(), s.views.original_index());
    const EmbeddingSet permuted = s.views.select(perm, static_cast<Index>(at - perm.begin()));
    const Solution a = mta_solve(s.views, s.classes, params);
    const Solution b = mta_solve(permuted, s.classes, params);
    perm_worst = std::max(perm_worst, (a.mode - b.mode).norm());
    for (Index k = 0; k < n; ++k) {
      perm_worst = std::max(perm_worst, std::abs(b.y[k] - a.y[perm[static_cast<std::size_t>(k)]]));
    }
  }
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Scene s = random_instance(1209, i);
    const Solution sol = mta_solve(s.views, s.classes, params);
    const PredictionReport a = predict_from_mode(sol.mode, s.classes);
    for (double c : {1e-3, 0.5, 7.0, 1e4}) {
      const PredictionReport b = predict_from_mode(c * sol.mode, s.classes);
      class_changes += a.predicted_class != b.predicted_class ? 1 : 0;
      scale_worst = std::max(scale_worst, (a.similarities - b.similarities).cwiseAbs().maxCoeff());
    }
  }
  Outcome o;
  o.pass = rot_worst <= 1e-8 && perm_worst <= 1e-8 && scale_worst <= 1e-8 && class_changes == 0;
  o.summary = format("invariance: rotation %.2e, permutation %.2e, prediction scale %.2e "
                     "(limit 1e-8), %d class changes under rescaling",
                     rot_worst, perm_worst, scale_worst, class_changes);
  return o;
}

Outcome a10_performance() {
  SceneConfig config;
  config.dim = 512;
  config.n_classes = 100;
  config.n_views = 64;
  config.seed = 10;
  const Hyperparams params;
  std::vector<double> ms;
  for (std::uint64_t t = 0; t < 9; ++t) {
    const Scene s = generate_scene(config, t);
    const auto start = Clock::now();
    const Solution sol = mta_solve(s.views, s.classes, params);
    ms.push_back(1000.0 * seconds_since(start));
    if (sol.y.size() != 64) ms.back() = 1e9;
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];

  const std::vector<std::string> args = {"bench", "--trials", "10", "--seed", "7", "--quiet"};
  std::ostringstream out1, out2, err;
  const int c1 = run_command(args, out1, err);
  const int c2 = run_command(args, out2, err);
  const bool identical = c1 == 0 && c2 == 0 && out1.str() == out2.str() && !out1.str().empty();

  Outcome o;
  o.pass = median < 50.0 && identical;
  o.summary = format("performance: mta_solve N=64 d=512 K=100 median %.2f ms, max %.2f ms "
                     "(limit 50 ms); bench reruns byte-identical: %s",
                     median, ms.back(), identical ? "yes" : "no");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"A1", a1_simplex},       {"A2", a2_monotonicity}, {"A3", a3_descent},
      {"A4", a4_reduction},     {"A5", a5_stationarity}, {"A6", a6_grid},
      {"A7", a7_ordering},      {"A8", a8_lambda_y_trend}, {"A9", a9_invariance},
      {"A10", a10_performance}};
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const Outcome o = check();
    failed += o.pass ? 0 : 1;
    std::printf("%s %s %s\n", o.pass ? "PASS" : "FAIL", name, o.summary.c_str());
    for (const auto& d : o.details) std::printf("      %s\n", d.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}

#include "mta/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "mta/bundle.hpp"
#include "mta/errors.hpp"
#include "mta/oracles.hpp"
#include "mta/parallel.hpp"
#include "mta/predictors.hpp"
#include "mta/records.hpp"
#include "mta/synthetic.hpp"

namespace mta {

namespace fs = std::filesystem;

namespace {

constexpr double kGridGapTolerance = 1e-3;

// Hyperparameter flags shared by run, bench and verify. Enum-valued flags are
// kept as strings and parsed afterwards so that bad values exit with the
// same ConfigError message as the library.
struct ParamOptions {
  Hyperparams params;
  std::string affinity = "text";
  std::string diagonal = "zeroed";
  std::string mode_update = "scaled";
  int max_inner = 0;

  void add_to(CLI::App* app) {
    app->add_option("--lambda", params.lambda, "affinity coupling weight")->capture_default_str();
    app->add_option("--lambda-y", params.lambda_y, "entropy barrier weight")->capture_default_str();
    app->add_option("--rho", params.rho, "bandwidth neighbour ratio")->capture_default_str();
    app->add_option("--epsilon", params.epsilon, "convergence threshold")->capture_default_str();
    app->add_option("--max-outer", params.max_outer, "outer iteration cap")->capture_default_str();
    app->add_option("--max-inner", max_inner, "cap for both inner loops (default 100)");
    app->add_option("--max-inner-y", params.max_inner_y, "inlierness loop cap")
        ->capture_default_str();
    app->add_option("--max-inner-m", params.max_inner_m, "mode loop cap")->capture_default_str();
    app->add_option("--affinity", affinity, "text|vision")->capture_default_str();
    app->add_option("--diagonal", diagonal, "zeroed|kept")->capture_default_str();
    app->add_option("--fraction", params.fraction, "kept fraction for the threshold baseline")
        ->capture_default_str();
    app->add_option("--mode-update", mode_update, "scaled|literal")->capture_default_str();
  }

  Hyperparams resolve() const {
    Hyperparams p = params;
    p.affinity = parse_affinity_kind(affinity);
    p.diagonal = parse_diagonal_mode(diagonal);
    p.mode_update = parse_mode_update(mode_update);
    if (max_inner != 0) {
      p.max_inner_y = max_inner;
      p.max_inner_m = max_inner;
    }
    p.validate();
    return p;
  }
};

struct SceneOptions {
  SceneConfig config;
  std::string outlier_mode = "wrong_class";

  void add_to(CLI::App* app) {
    app->add_option("--seed", config.seed, "base seed")->capture_default_str();
    app->add_option("--dim", config.dim, "embedding dimension")->capture_default_str();
    app->add_option("--classes", config.n_classes, "number of classes")->capture_default_str();
    app->add_option("--views", config.n_views, "views per scene")->capture_default_str();
    app->add_option("--inlier-noise", config.inlier_noise, "inlier noise norm")
        ->capture_default_str();
    app->add_option("--outlier-fraction", config.outlier_fraction, "planted outlier fraction")
        ->capture_default_str();
    app->add_option("--outlier-mode", outlier_mode, "wrong_class|uniform_sphere")
        ->capture_default_str();
    app->add_option("--outlier-noise", config.outlier_noise,
                    "outlier noise norm (negative: same as inliers)")
        ->capture_default_str();
    app->add_option("--text-noise", config.text_noise, "class embedding noise norm")
        ->capture_default_str();
    app->add_option("--temperature", config.temperature, "softmax logit scale")
        ->capture_default_str();
  }

  SceneConfig resolve() const {
    SceneConfig c = config;
    c.outlier_mode = parse_outlier_mode(outlier_mode);
    c.validate();
    return c;
  }
};

// Either the caller's stream or a file opened for --output.
class RecordSink {
 public:
  RecordSink(std::ostream& fallback, const std::string& path) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) throw ConfigError("cannot open output file " + path);
      stream_ = &file_;
    }
  }
  void write(const Json& record) { *stream_ << to_line(record) << '\n'; }
  void flush() { stream_->flush(); }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

int resolve_jobs(int jobs) { return jobs > 0 ? jobs : default_jobs(); }

std::string fixed(double value, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << value;
  return s.str();
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::vector<std::string> bundles;
  std::string method = "mta";
  bool ensemble = false;
  std::optional<double> temperature;
  std::string output;
  int jobs = 0;
  ParamOptions params;
};

Json run_sample(const Bundle& bundle, Method method, bool ensemble, const Hyperparams& params) {
  Json record = make_record("prediction");
  const auto n_sets = ensemble ? bundle.class_sets.size() : std::size_t{1};
  std::vector<PredictionReport> reports;
  reports.reserve(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    reports.push_back(predict(method, bundle.views, bundle.class_sets[s], params));
  }
  if (!ensemble) {
    record.update(prediction_fields(reports.front()));
    return record;
  }

  PredictionReport combined = ensemble_vote(reports);
  Json per_set = Json::array();
  double wall = 0.0;
  for (const auto& r : reports) {
    per_set.push_back(prediction_fields(r));
    wall += r.wall_time_ms;
  }
  combined.wall_time_ms = wall;
  record.update(prediction_fields(combined));
  // Inlierness and traces differ per prompt set; they live in "prompt_sets".
  record["prompt_sets"] = std::move(per_set);
  return record;
}

int cmd_run(RunOptions& opt, std::ostream& out, std::ostream& err) {
  const Hyperparams params = opt.params.resolve();
  const Method method = parse_method(opt.method);
  if (opt.temperature && !(*opt.temperature > 0.0)) {
    throw ConfigError("--temperature must be positive");
  }

  std::vector<Bundle> bundles;
  bundles.reserve(opt.bundles.size());
  for (const auto& path : opt.bundles) {
    Bundle b = read_bundle(path);
    if (opt.temperature) {
      for (auto& set : b.class_sets) set = ClassEmbeddings(set.classes(), *opt.temperature, set.names());
      b.header.temperature = *opt.temperature;
    }
    bundles.push_back(std::move(b));
  }

  RecordSink sink(out, opt.output);
  std::vector<Json> records(bundles.size());
  parallel_for(bundles.size(), resolve_jobs(opt.jobs), [&](std::size_t i) {
    const Bundle& b = bundles[i];
    Json head = make_record("prediction");
    head["sample"] = i;
    head["bundle"] = opt.bundles[i];
    head["n_views"] = b.header.n_views;
    head["n_classes"] = b.header.n_classes;
    head["dim"] = b.header.dim;
    head["temperature"] = b.header.temperature;
    head["ensemble"] = opt.ensemble;
    head["n_prompt_sets"] = b.header.n_prompt_sets;
    head["params"] = to_json(params);
    try {
      head.update(run_sample(b, method, opt.ensemble, params));
      head["method"] = opt.method;
      if (b.header.label) {
        head["label"] = *b.header.label;
        head["correct"] = head["predicted_class"].get<std::int64_t>() == *b.header.label;
      }
    } catch (const Error& e) {
      // Degenerate inputs (e.g. a mode that collapses to the origin) are
      // reported per sample; the remaining samples still run.
      head["method"] = opt.method;
      head["error"] = e.what();
    }
    records[i] = std::move(head);
  });

  int labelled = 0;
  int correct = 0;
  int failed = 0;
  for (const auto& r : records) {
    sink.write(r);
    if (r.contains("error")) ++failed;
    if (r.contains("correct")) {
      ++labelled;
      correct += r["correct"].get<bool>() ? 1 : 0;
    }
  }
  sink.flush();
  if (failed > 0) err << failed << " sample(s) could not be predicted; see \"error\" fields\n";
  if (labelled > 0) {
    err << opt.method << ": " << correct << "/" << labelled << " correct ("
        << fixed(100.0 * correct / labelled, 2) << "%)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
  SceneOptions scene;
  ParamOptions params;
  int trials = 100;
  std::vector<std::string> methods = {"mta", "meanshift", "threshold", "mean", "zeroshot"};
  bool per_trial = false;
  bool timing = false;
  bool quiet = false;
  std::string output;
  int jobs = 0;
};

void print_bench_table(const BenchResult& result, std::ostream& err) {
  err << std::left << std::setw(11) << "method" << std::right << std::setw(9) << "accuracy"
      << std::setw(18) << "95% CI" << std::setw(13) << "inlier mass" << std::setw(8) << "outer"
      << std::setw(9) << "flagged" << '\n';
  for (const auto& m : result.methods) {
    err << std::left << std::setw(11) << to_string(m.method) << std::right << std::setw(9)
        << fixed(m.accuracy, 4) << std::setw(18)
        << ("[" + fixed(m.ci_low, 3) + ", " + fixed(m.ci_high, 3) + "]") << std::setw(13)
        << fixed(m.mean_inlier_mass, 4) << std::setw(8) << fixed(m.mean_outer_iterations, 2)
        << std::setw(9) << m.flagged_trials << '\n';
  }
  err << result.trials << " trials, " << fixed(result.wall_time_ms / 1000.0, 2) << " s\n";
}

int cmd_bench(BenchOptions& opt, std::ostream& out, std::ostream& err) {
  const Hyperparams params = opt.params.resolve();
  const SceneConfig config = opt.scene.resolve();
  std::vector<Method> methods;
  for (const auto& name : opt.methods) methods.push_back(parse_method(name));
  if (opt.trials < 1) throw ConfigError("--trials must be >= 1");

  const BenchResult result =
      run_benchmark(config, methods, opt.trials, params, resolve_jobs(opt.jobs));
  RecordSink sink(out, opt.output);
  for (const auto& r : bench_records(result, {opt.per_trial, opt.timing})) sink.write(r);
  sink.flush();
  if (!opt.quiet) print_bench_table(result, err);
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOptions {
  std::vector<std::string> bundles;
  int random = 0;
  std::uint64_t seed = 0;
  bool planar = false;
  Index max_views = 64;
  Index max_dim = 32;
  int grid_resolution = 200;
  std::string output;
  int jobs = 0;
  ParamOptions params;
};

struct VerifyInstance {
  std::string source;
  EmbeddingSet views;
  ClassEmbeddings classes;
};

struct VerifyOutcome {
  Json record;
  int stationarity = 0;  // 1 pass, -1 fail, 0 skipped
  int grid = 0;
};

VerifyOutcome verify_instance(const VerifyInstance& inst, const Hyperparams& params,
                              int resolution) {
  VerifyOutcome result;
  Json& j = result.record;
  j = make_record("verify");
  j["source"] = inst.source;
  j["n_views"] = inst.views.size();
  j["dim"] = inst.views.dim();
  j["n_classes"] = inst.classes.size();
  j["params"] = to_json(params);

  const Solution sol = mta_solve(inst.views, inst.classes, params);
  const Problem problem = build_problem(inst.views, inst.classes, params);
  const double obj = objective(problem, sol.mode, sol.y, params);
  j["objective"] = obj;
  j["converged"] = sol.trace.converged;
  j["flags"] = sol.trace.flags.names();

  const StationarityReport st = stationarity_oracle(inst.views, inst.classes, sol, params);
  const double grad_tol = std::max(1e-4, 100.0 * params.epsilon);
  const double y_tol = 10.0 * params.epsilon;
  j["gradient_norm"] = st.gradient_norm;
  j["y_residual"] = st.y_residual;
  j["gradient_tolerance"] = grad_tol;
  j["y_tolerance"] = y_tol;
  if (!sol.trace.converged) {
    j["stationarity"] = "skipped";
  } else {
    result.stationarity = (st.gradient_norm <= grad_tol && st.y_residual <= y_tol) ? 1 : -1;
    j["stationarity"] = result.stationarity > 0 ? "pass" : "fail";
  }

  if (inst.views.dim() == 2 && inst.views.size() <= kGridOracleMaxViews) {
    const GridOracleResult g = grid_oracle(inst.views, inst.classes, params, resolution);
    const double gap = obj - g.minimum;
    result.grid = gap <= kGridGapTolerance ? 1 : -1;
    j["grid"] = {{"minimum", g.minimum},
                 {"argmin", to_json(g.argmin)},
                 {"resolution", g.resolution},
                 {"gap", gap},
                 {"status", result.grid > 0 ? "pass" : "fail"}};
  } else {
    j["grid"] = nullptr;
  }
  return result;
}

int cmd_verify(VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  const Hyperparams params = opt.params.resolve();
  if (opt.bundles.empty() && opt.random < 1) {
    throw ConfigError("verify needs bundle paths or --random N");
  }
  if (opt.grid_resolution < 2) throw ConfigError("--grid-resolution must be >= 2");

  std::vector<VerifyInstance> instances;
  for (const auto& path : opt.bundles) {
    Bundle b = read_bundle(path);
    instances.push_back({path, std::move(b.views), std::move(b.class_sets.front())});
  }
  InstanceRanges ranges;
  ranges.max_views = std::max<Index>(ranges.min_views, opt.max_views);
  ranges.max_dim = std::max<Index>(ranges.min_dim, opt.max_dim);
  if (opt.planar) {
    ranges.min_dim = ranges.max_dim = 2;
    ranges.max_views = std::min<Index>(ranges.max_views, kGridOracleMaxViews);
  }
  for (int i = 0; i < opt.random; ++i) {
    Scene s = random_instance(opt.seed, static_cast<std::uint64_t>(i), ranges);
    instances.push_back({"random:" + std::to_string(opt.seed) + ":" + std::to_string(i),
                         std::move(s.views), std::move(s.classes)});
  }

  std::vector<VerifyOutcome> outcomes(instances.size());
  parallel_for(instances.size(), resolve_jobs(opt.jobs), [&](std::size_t i) {
    outcomes[i] = verify_instance(instances[i], params, opt.grid_resolution);
  });

  RecordSink sink(out, opt.output);
  int counts[2][3] = {};  // [stationarity|grid][fail, skipped, pass]
  for (const auto& o : outcomes) {
    sink.write(o.record);
    ++counts[0][o.stationarity + 1];
    ++counts[1][o.grid + 1];
  }
  Json summary = make_record("verify_summary");
  summary["instances"] = outcomes.size();
  summary["stationarity"] = {{"pass", counts[0][2]}, {"fail", counts[0][0]}, {"skipped", counts[0][1]}};
  summary["grid"] = {{"pass", counts[1][2]}, {"fail", counts[1][0]}, {"skipped", counts[1][1]}};
  sink.write(summary);
  sink.flush();

  err << "stationarity: " << counts[0][2] << " pass, " << counts[0][0] << " fail, "
      << counts[0][1] << " skipped (not converged)\n"
      << "grid oracle:  " << counts[1][2] << " pass, " << counts[1][0] << " fail, "
      << counts[1][1] << " skipped (needs d = 2, N <= " << kGridOracleMaxViews << ")\n";
  return counts[0][0] + counts[1][0] > 0 ? kExitCheckFailed : kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  SceneOptions scene;
  std::string out_dir;
  int count = 1;
};

int cmd_synth(SynthOptions& opt, std::ostream& out, std::ostream&) {
  const SceneConfig config = opt.scene.resolve();
  if (opt.count < 1) throw ConfigError("--count must be >= 1");
  for (int i = 0; i < opt.count; ++i) {
    const Scene scene = generate_scene(config, static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05d", i);
    const fs::path dir = fs::path(opt.out_dir) / name;
    BundleHeader header;
    header.label = scene.true_label;
    header.metadata = {{"generator", "mta synth"}, {"scene", to_json(config)}, {"stream", i}};
    write_bundle(scene.views, std::span<const ClassEmbeddings>(&scene.classes, 1), header, dir);
    Json j = make_record("synth");
    j["bundle"] = dir.string();
    j["label"] = scene.true_label;
    out << to_line(j) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust multi-modal MeanShift for test-time augmentation", "mta"};
  app.require_subcommand(1, 1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "predict one or more sample bundles");
  run->add_option("bundles", run_opt.bundles, "bundle directories")->required();
  run->add_option("--method", run_opt.method, "mta|meanshift|threshold|mean|zeroshot")
      ->capture_default_str();
  run->add_flag("--ensemble", run_opt.ensemble, "majority vote over all prompt sets");
  run->add_option("--temperature", run_opt.temperature, "override the bundle's logit scale");
  run->add_option("--output", run_opt.output, "write records here instead of stdout");
  run->add_option("--jobs", run_opt.jobs, "worker threads (default: MTA_THREADS or 1)");
  run_opt.params.add_to(run);

  BenchOptions bench_opt;
  CLI::App* bench = app.add_subcommand("bench", "synthetic benchmark");
  bench_opt.scene.add_to(bench);
  bench_opt.params.add_to(bench);
  bench->add_option("--trials", bench_opt.trials, "scenes per method")->capture_default_str();
  bench->add_option("--methods", bench_opt.methods, "comma-separated method list")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_flag("--per-trial", bench_opt.per_trial, "emit one record per trial");
  bench->add_flag("--timing", bench_opt.timing, "include wall time in method records");
  bench->add_flag("--quiet", bench_opt.quiet, "no summary table");
  bench->add_option("--output", bench_opt.output, "write records here instead of stdout");
  bench->add_option("--jobs", bench_opt.jobs, "worker threads (default: MTA_THREADS or 1)");

  VerifyOptions verify_opt;
  CLI::App* verify = app.add_subcommand("verify", "stationarity and grid oracles");
  verify->add_option("bundles", verify_opt.bundles, "bundle directories");
  verify->add_option("--random", verify_opt.random, "number of random instances");
  verify->add_option("--seed", verify_opt.seed, "seed for random instances")
      ->capture_default_str();
  verify->add_flag("--planar", verify_opt.planar, "random instances with d = 2 and N <= 8");
  verify->add_option("--max-views", verify_opt.max_views, "largest random N")
      ->capture_default_str();
  verify->add_option("--max-dim", verify_opt.max_dim, "largest random d")->capture_default_str();
  verify->add_option("--grid-resolution", verify_opt.grid_resolution, "grid points per axis")
      ->capture_default_str();
  verify->add_option("--output", verify_opt.output, "write records here instead of stdout");
  verify->add_option("--jobs", verify_opt.jobs, "worker threads (default: MTA_THREADS or 1)");
  verify_opt.params.add_to(verify);

  SynthOptions synth_opt;
  CLI::App* synth = app.add_subcommand("synth", "write synthetic scenes as bundles");
  synth->add_option("--out", synth_opt.out_dir, "output directory")->required();
  synth->add_option("--count", synth_opt.count, "number of scenes")->capture_default_str();
  synth_opt.scene.add_to(synth);

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("mta");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opt, out, err);
    if (bench->parsed()) return cmd_bench(bench_opt, out, err);
    if (verify->parsed()) return cmd_verify(verify_opt, out, err);
    return cmd_synth(synth_opt, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const NonFiniteError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const ZeroVectorError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFormat;
  }
}

}  // namespace mta

#include "mta/records.hpp"

namespace mta {

Json make_record(const std::string& kind) {
  Json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["record"] = kind;
  return j;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const Hyperparams& params) {
  Json j;
  j["lambda"] = params.lambda;
  j["lambda_y"] = params.lambda_y;
  j["rho"] = params.rho;
  j["epsilon"] = params.epsilon;
  j["max_outer"] = params.max_outer;
  j["max_inner_y"] = params.max_inner_y;
  j["max_inner_m"] = params.max_inner_m;
  j["affinity"] = std::string(to_string(params.affinity));
  j["diagonal"] = std::string(to_string(params.diagonal));
  j["mode_update"] = std::string(to_string(params.mode_update));
  j["fraction"] = params.fraction;
  return j;
}

Json to_json(const SceneConfig& config) {
  Json j;
  j["seed"] = config.seed;
  j["dim"] = config.dim;
  j["n_classes"] = config.n_classes;
  j["n_views"] = config.n_views;
  j["inlier_noise"] = config.inlier_noise;
  j["outlier_fraction"] = config.outlier_fraction;
  j["outlier_mode"] = std::string(to_string(config.outlier_mode));
  j["outlier_noise"] = config.effective_outlier_noise();
  j["text_noise"] = config.text_noise;
  j["temperature"] = config.temperature;
  return j;
}

Json prediction_fields(const PredictionReport& report) {
  Json j;
  j["method"] = report.method;
  j["predicted_class"] = report.predicted_class;
  j["class_name"] = report.class_name;
  j["similarities"] = to_json(report.similarities);
  j["inlierness"] = report.inlierness ? to_json(*report.inlierness) : Json(nullptr);
  if (report.trace) {
    const TraceSummary& t = *report.trace;
    j["iterations"] = {{"outer", t.outer_iterations}, {"y", t.y_iterations}, {"m", t.m_iterations}};
    j["objective"] = t.objective;
    j["objective_trajectory"] = t.objective_trajectory;
    j["converged"] = t.converged;
    j["flags"] = t.flags.names();
    j["descent_violations"] = t.descent_violations;
  } else {
    j["iterations"] = {{"outer", 0}, {"y", 0}, {"m", 0}};
    j["objective"] = nullptr;
    j["objective_trajectory"] = Json::array();
    j["converged"] = true;
    j["flags"] = Json::array();
    j["descent_violations"] = 0;
  }
  if (report.votes) j["votes"] = *report.votes;
  j["wall_time_ms"] = report.wall_time_ms;
  return j;
}

std::vector<Json> bench_records(const BenchResult& result, const BenchOutputOptions& options) {
  std::vector<Json> out;
  Json config = make_record("bench_config");
  config["scene"] = to_json(result.config);
  config["params"] = to_json(result.params);
  config["trials"] = result.trials;
  Json methods = Json::array();
  for (const auto& m : result.methods) methods.push_back(std::string(to_string(m.method)));
  config["methods"] = methods;
  out.push_back(std::move(config));

  if (options.per_trial) {
    for (const auto& trial : result.per_trial) {
      Json j = make_record("bench_trial");
      j["trial"] = trial.trial;
      j["true_label"] = trial.true_label;
      Json outcomes = Json::object();
      for (std::size_t i = 0; i < trial.outcomes.size(); ++i) {
        const auto& o = trial.outcomes[i];
        outcomes[std::string(to_string(result.methods[i].method))] = {
            {"predicted", o.predicted}, {"correct", o.correct}, {"inlier_mass", o.inlier_mass}};
      }
      j["outcomes"] = std::move(outcomes);
      out.push_back(std::move(j));
    }
  }

  for (const auto& m : result.methods) {
    Json j = make_record("bench_method");
    j["method"] = std::string(to_string(m.method));
    j["trials"] = m.trials;
    j["correct"] = m.correct;
    j["accuracy"] = m.accuracy;
    j["ci_low"] = m.ci_low;
    j["ci_high"] = m.ci_high;
    j["mean_inlier_mass"] = m.mean_inlier_mass;
    j["mean_outer_iterations"] = m.mean_outer_iterations;
    j["mean_y_iterations"] = m.mean_y_iterations;
    j["mean_m_iterations"] = m.mean_m_iterations;
    j["flagged_trials"] = m.flagged_trials;
    if (options.timing) j["wall_time_ms"] = m.wall_time_ms;
    out.push_back(std::move(j));
  }
  return out;
}

std::string to_line(const Json& record) { return record.dump(); }

}  // namespace mta

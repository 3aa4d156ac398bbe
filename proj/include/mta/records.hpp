#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mta/oracles.hpp"
#include "mta/predictors.hpp"
#include "mta/solver.hpp"
#include "mta/synthetic.hpp"

namespace mta {

/// Every emitted record carries this as "schema_version".
inline constexpr int kRecordSchemaVersion = 1;

using Json = nlohmann::json;

/// Starts a record: {"schema_version": 1, "record": kind}.
Json make_record(const std::string& kind);

Json to_json(const Hyperparams& params);
Json to_json(const SceneConfig& config);
Json to_json(const Vector& v);

/// Prediction fields shared by every method: class, similarities,
/// inlierness, iteration counts, objective trajectory, flags, wall time.
/// Fields a method does not produce are null.
Json prediction_fields(const PredictionReport& report);

struct BenchOutputOptions {
  bool per_trial = false;
  bool timing = false;  // wall time breaks byte-identical reruns, so opt-in
};

/// bench_config, optional bench_trial lines, then one bench_method line per
/// method, in that order.
std::vector<Json> bench_records(const BenchResult& result, const BenchOutputOptions& options);

/// Compact single-line serialization (no trailing newline).
std::string to_line(const Json& record);

}  // namespace mta

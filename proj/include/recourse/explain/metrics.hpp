#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "recourse/causal/causal_model.hpp"
#include "recourse/data/scaling.hpp"
#include "recourse/data/stats.hpp"
#include "recourse/explain/path.hpp"
#include "recourse/mdp/cfe_mdp.hpp"
#include "recourse/solvers/policy.hpp"

namespace recourse::explain {

// Sum over numerical features of |final - start| in original units divided
// by the feature's train-split MAD (half the domain width when MAD is 0).
double prox_num(const CfePath& path, const data::FeatureSchema& schema, const data::ScalingTransform& scaler,
                const data::TrainStats& stats);
// Fraction of categorical features whose final code differs from the start
// (0 when the schema has none).
double prox_cat(const CfePath& path, const data::FeatureSchema& schema);
// Number of features whose final value differs from the start.
double sparsity(const CfePath& path);

// Everything evaluate() needs besides the paths.
struct MetricContext {
  data::FeatureSchema schema;
  data::ScalingTransform scaler;
  std::optional<data::TrainStats> stats;  // required when there are numerical features
  causal::CausalModel causal;
  std::function<double(std::span<const double>)> manifold_distance;
};

MetricContext metric_context(const mdp::Environment& env);
MetricContext metric_context(const mdp::CfeMdp& mdp);

struct EvalReport {
  std::string method;
  std::size_t n_datapoints = 0;
  std::size_t n_valid = 0;
  double validity = 0.0;       // percent of all paths
  double prox_num = NAN;       // averages over valid paths (NaN when none)
  double prox_cat = NAN;
  double sparsity = NAN;
  double manifold_dist = NAN;  // at the final state
  double causality = 0.0;      // percent of all paths
  double mean_time = 0.0;      // seconds per path
  double mean_steps = NAN;     // valid paths
  double mean_step_manifold_dist = NAN;  // over every visited state of valid paths
};

// Throws EmptyInput for an empty path list.
EvalReport evaluate(const std::vector<CfePath>& paths, const MetricContext& ctx, const std::string& method = {});

struct BatchResult {
  std::vector<CfePath> paths;
  EvalReport report;
};

// One rollout per start (see rollout_batch) plus the report over them. An
// empty start list gives no paths and a report with n_datapoints = 0.
BatchResult explain_batch(const solvers::Policy& policy, const mdp::Environment& env, const MetricContext& ctx,
                          const std::vector<State>& starts, std::size_t step_cap, std::uint64_t seed,
                          std::size_t threads = 1);

// Undefined averages are written as null.
json report_to_json(const EvalReport& report);
// Columns: Validity, Prox-Num, Prox-Cat, Sparsity, Manifold dist., Causality,
// Time (s); undefined averages print as N/A.
std::string report_table(const std::vector<EvalReport>& reports);

// One JSON object per path, states and actions in original units.
json path_to_json(const CfePath& path, const data::FeatureSchema& schema);
void write_paths_jsonl(std::ostream& out, const std::vector<CfePath>& paths, const data::FeatureSchema& schema);

}  // namespace recourse::explain

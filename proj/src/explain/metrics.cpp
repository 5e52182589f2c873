#include "recourse/explain/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "recourse/common/error.hpp"
#include "recourse/explain/rollout.hpp"
#include "recourse/mdp/codec.hpp"

namespace recourse::explain {

namespace {

constexpr double kChangeTolerance = 1e-9;

void require_valid(const CfePath& path, const char* metric) {
  if (!path.valid) throw Error(ErrorCode::kInvalidPath, std::string(metric) + " is defined for valid paths only");
  if (path.start.size() != path.final_state.size()) {
    throw Error(ErrorCode::kInvalidPath, "path start and final state differ in width");
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string cell(double v, int precision) {
  if (!std::isfinite(v)) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

double prox_num(const CfePath& path, const data::FeatureSchema& schema, const data::ScalingTransform& scaler,
                const data::TrainStats& stats) {
  require_valid(path, "prox_num");
  double total = 0.0;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (!schema.feature(j).is_numerical()) continue;
    const double change = std::abs(scaler.unscale(j, path.final_state[j]) - scaler.unscale(j, path.start[j]));
    total += change / stats.proximity_scale(j);
  }
  return total;
}

double prox_cat(const CfePath& path, const data::FeatureSchema& schema) {
  require_valid(path, "prox_cat");
  std::size_t categorical = 0;
  std::size_t changed = 0;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (!schema.feature(j).is_categorical()) continue;
    ++categorical;
    if (path.final_state[j] != path.start[j]) ++changed;
  }
  return categorical == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(categorical);
}

double sparsity(const CfePath& path) {
  require_valid(path, "sparsity");
  std::size_t changed = 0;
  for (std::size_t j = 0; j < path.start.size(); ++j) {
    if (std::abs(path.final_state[j] - path.start[j]) > kChangeTolerance) ++changed;
  }
  return static_cast<double>(changed);
}

MetricContext metric_context(const mdp::Environment& env) {
  MetricContext ctx{env.schema(), data::ScalingTransform(env.schema()), std::nullopt, env.causal_model(),
                    [&env](std::span<const double> s) { return env.manifold_distance(s); }};
  return ctx;
}

MetricContext metric_context(const mdp::CfeMdp& mdp) {
  MetricContext ctx = metric_context(static_cast<const mdp::Environment&>(mdp));
  ctx.stats = mdp.stats();
  return ctx;
}

EvalReport evaluate(const std::vector<CfePath>& paths, const MetricContext& ctx, const std::string& method) {
  if (paths.empty()) throw Error(ErrorCode::kEmptyInput, "no paths to evaluate");
  const bool has_numerical = ctx.schema.num_numerical() > 0;
  if (has_numerical && !ctx.stats) {
    throw Error(ErrorCode::kPreconditionViolated, "numerical proximity needs train-split statistics");
  }
  EvalReport r;
  r.method = method;
  r.n_datapoints = paths.size();
  double sum_num = 0.0, sum_cat = 0.0, sum_sparsity = 0.0, sum_manifold = 0.0, sum_steps = 0.0;
  double sum_step_manifold = 0.0;
  std::size_t visited = 0;
  std::size_t causal_ok = 0;
  double total_time = 0.0;
  for (const auto& p : paths) {
    total_time += p.wall_time;
    if (causal::path_respects_causality(ctx.causal, ctx.schema, p)) ++causal_ok;
    if (!p.valid) continue;
    ++r.n_valid;
    sum_num += has_numerical ? prox_num(p, ctx.schema, ctx.scaler, *ctx.stats) : 0.0;
    sum_cat += prox_cat(p, ctx.schema);
    sum_sparsity += sparsity(p);
    sum_manifold += ctx.manifold_distance(p.final_state);
    sum_steps += static_cast<double>(p.steps.size());
    for (const auto& step : p.steps) {
      sum_step_manifold += ctx.manifold_distance(step.after);
      ++visited;
    }
  }
  const double n = static_cast<double>(paths.size());
  r.validity = 100.0 * static_cast<double>(r.n_valid) / n;
  r.causality = 100.0 * static_cast<double>(causal_ok) / n;
  r.mean_time = total_time / n;
  if (r.n_valid > 0) {
    const double v = static_cast<double>(r.n_valid);
    r.prox_num = sum_num / v;
    r.prox_cat = sum_cat / v;
    r.sparsity = sum_sparsity / v;
    r.manifold_dist = sum_manifold / v;
    r.mean_steps = sum_steps / v;
  }
  if (visited > 0) r.mean_step_manifold_dist = sum_step_manifold / static_cast<double>(visited);
  return r;
}

BatchResult explain_batch(const solvers::Policy& policy, const mdp::Environment& env, const MetricContext& ctx,
                          const std::vector<State>& starts, std::size_t step_cap, std::uint64_t seed,
                          std::size_t threads) {
  BatchResult out;
  out.report.method = policy.name();
  if (starts.empty()) return out;
  out.paths = rollout_batch(policy, env, starts, step_cap, seed, threads);
  out.report = evaluate(out.paths, ctx, policy.name());
  return out;
}

json report_to_json(const EvalReport& r) {
  return {{"method", r.method},
          {"n_datapoints", r.n_datapoints},
          {"n_valid", r.n_valid},
          {"validity", r.n_datapoints > 0 ? json(r.validity) : json(nullptr)},
          {"prox_num", number_or_null(r.prox_num)},
          {"prox_cat", number_or_null(r.prox_cat)},
          {"sparsity", number_or_null(r.sparsity)},
          {"manifold_dist", number_or_null(r.manifold_dist)},
          {"causality", r.n_datapoints > 0 ? json(r.causality) : json(nullptr)},
          {"mean_time", r.mean_time},
          {"mean_steps", number_or_null(r.mean_steps)},
          {"mean_step_manifold_dist", number_or_null(r.mean_step_manifold_dist)}};
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %10s %9s %9s %9s %9s %15s %10s %10s\n", "Approach", "#DataPts.", "Validity",
                "Prox-Num", "Prox-Cat", "Sparsity", "Manifold dist.", "Causality", "Time (s)");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-16s %10zu %9s %9s %9s %9s %15s %10s %10s\n",
                  r.method.empty() ? "-" : r.method.c_str(), r.n_datapoints,
                  cell(r.n_datapoints > 0 ? r.validity : NAN, 1).c_str(), cell(r.prox_num, 3).c_str(),
                  cell(r.prox_cat, 3).c_str(), cell(r.sparsity, 2).c_str(), cell(r.manifold_dist, 2).c_str(),
                  cell(r.n_datapoints > 0 ? r.causality : NAN, 1).c_str(), cell(r.mean_time, 6).c_str());
    out << line;
  }
  return out.str();
}

json path_to_json(const CfePath& path, const data::FeatureSchema& schema) {
  const mdp::StateCodec codec(schema);
  json steps = json::array();
  for (const auto& s : path.steps) {
    steps.push_back({{"action", codec.action_to_json(s.action)},
                     {"state", codec.state_to_json(s.after)},
                     {"reward", s.reward}});
  }
  return {{"start", codec.state_to_json(path.start)},
          {"steps", steps},
          {"final", codec.state_to_json(path.final_state)},
          {"valid", path.valid},
          {"n_steps", path.steps.size()},
          {"wall_time", path.wall_time}};
}

void write_paths_jsonl(std::ostream& out, const std::vector<CfePath>& paths, const data::FeatureSchema& schema) {
  for (const auto& p : paths) out << path_to_json(p, schema).dump() << '\n';
}

}  // namespace recourse::explain

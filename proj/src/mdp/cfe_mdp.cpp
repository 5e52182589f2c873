#include "recourse/mdp/cfe_mdp.hpp"

#include <algorithm>
#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::mdp {

void RewardConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::kConfigError, "lambda must be >= 0", "lambda");
  if (!(cf_reward > 0.0)) throw Error(ErrorCode::kConfigError, "cf_reward must be > 0", "cf_reward");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kConfigError, "gamma must lie in [0, 1]", "gamma");
  if (!(max_step_frac > 0.0 && max_step_frac <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "max_step_frac must lie in (0, 1]", "max_step_frac");
  }
}

json reward_config_to_json(const RewardConfig& cfg) {
  return {{"lambda", cfg.lambda},
          {"cf_reward", cfg.cf_reward},
          {"gamma", cfg.gamma},
          {"dist_f", cfg.dist_f == DistF::kZero ? "zero" : "percentile"},
          {"max_step_frac", cfg.max_step_frac},
          {"step_cap", cfg.step_cap}};
}

RewardConfig reward_config_from_json(const json& node) {
  RewardConfig cfg;
  try {
    cfg.lambda = node.value("lambda", cfg.lambda);
    cfg.cf_reward = node.value("cf_reward", cfg.cf_reward);
    cfg.gamma = node.value("gamma", cfg.gamma);
    cfg.max_step_frac = node.value("max_step_frac", cfg.max_step_frac);
    cfg.step_cap = node.value("step_cap", cfg.step_cap);
    const auto dist_f = node.value("dist_f", std::string("zero"));
    if (dist_f == "zero") {
      cfg.dist_f = DistF::kZero;
    } else if (dist_f == "percentile") {
      cfg.dist_f = DistF::kPercentile;
    } else {
      throw Error(ErrorCode::kConfigError, "unknown dist_f '" + dist_f + "'", "dist_f");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("reward config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

CfeMdp::CfeMdp(data::FeatureSchema schema, causal::CausalModel cm, std::shared_ptr<const model::Classifier> clf,
               std::shared_ptr<const ManifoldIndex> manifold, data::ScalingTransform scaler, data::TrainStats stats,
               RewardConfig cfg, std::string schema_fingerprint)
    : Environment(std::move(schema), std::move(cm), cfg.max_step_frac, cfg.gamma, cfg.step_cap),
      clf_(std::move(clf)),
      manifold_(std::move(manifold)),
      scaler_(std::move(scaler)),
      stats_(std::move(stats)),
      cfg_(cfg),
      fingerprint_(std::move(schema_fingerprint)) {
  cfg_.validate();
  if (!clf_ || !manifold_) throw Error(ErrorCode::kPreconditionViolated, "classifier and manifold are required");
  if (clf_->input_dim() != state_dim() || manifold_->dim() != state_dim()) {
    throw Error(ErrorCode::kSchemaMismatch, "classifier or manifold width differs from the schema");
  }
  const auto label = this->schema().desired_label();
  if (label < 0 || static_cast<std::size_t>(label) >= clf_->num_classes()) {
    throw Error(ErrorCode::kSchemaMismatch, "desired label is not a class of the classifier");
  }
}

bool CfeMdp::is_goal(std::span<const double> s) const { return clf_->predict(s) == desired_label(); }

double CfeMdp::desired_probability(std::span<const double> s) const {
  return clf_->predict_proba(s)[static_cast<std::size_t>(desired_label())];
}

double CfeMdp::action_cost(std::span<const double> s, std::span<const double> next) const {
  if (cfg_.dist_f == DistF::kZero) return 0.0;
  double cost = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] == next[j] || schema().feature(j).is_categorical()) continue;
    cost += std::abs(stats_.empirical_cdf(j, scaler_.unscale(j, next[j])) -
                     stats_.empirical_cdf(j, scaler_.unscale(j, s[j])));
  }
  return cost;
}

double CfeMdp::reward(std::span<const double> s, std::span<const double> next, bool* terminal) const {
  const auto p = clf_->predict_proba(next);
  const auto label = static_cast<std::size_t>(desired_label());
  const bool done = std::max_element(p.begin(), p.end()) - p.begin() == static_cast<long>(label);
  if (terminal != nullptr) *terminal = done;
  const double cf = done ? cfg_.cf_reward : p[label];
  const double dist_d = cfg_.lambda > 0.0 ? manifold_->distance(next) : 0.0;
  return cf - action_cost(s, next) - cfg_.lambda * dist_d;
}

StepResult CfeMdp::step(std::span<const double> s, const Action& a, Rng& rng) const {
  StepResult out;
  out.next = transition(s, a, rng);
  out.reward = reward(s, out.next, &out.terminal);
  return out;
}

std::vector<State> scaled_rows(const data::Dataset& ds, const data::ScalingTransform& scaler,
                               std::span<const std::size_t> rows) {
  std::vector<State> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(scaler.scale(ds.rows[r]));
  return out;
}

std::vector<bool> categorical_mask(const data::FeatureSchema& schema) {
  std::vector<bool> mask;
  for (const auto& f : schema.features()) mask.push_back(f.is_categorical());
  return mask;
}

std::shared_ptr<CfeMdp> build_mdp(const data::Dataset& ds, std::shared_ptr<const model::Classifier> clf,
                                  causal::CausalModel cm, const RewardConfig& cfg,
                                  const std::string& schema_fingerprint) {
  cfg.validate();
  if (!clf || clf->input_dim() != ds.schema.size() || clf->num_classes() != ds.schema.num_classes()) {
    throw Error(ErrorCode::kSchemaMismatch, "classifier does not match the dataset schema");
  }
  const auto clf_fp = clf->schema_fingerprint();
  if (!clf_fp.empty() && !schema_fingerprint.empty() && clf_fp != schema_fingerprint) {
    throw Error(ErrorCode::kSchemaMismatch, "classifier was trained against a different schema");
  }
  if (ds.split.train.empty()) throw Error(ErrorCode::kEmptySplit, "train split is empty");
  data::ScalingTransform scaler(ds.schema);
  auto manifold = std::make_shared<ManifoldIndex>(scaled_rows(ds, scaler, ds.split.train),
                                                  categorical_mask(ds.schema));
  return std::make_shared<CfeMdp>(ds.schema, std::move(cm), std::move(clf), std::move(manifold), std::move(scaler),
                                  data::compute_train_stats(ds), cfg, schema_fingerprint);
}

}  // namespace recourse::mdp

#pragma once

#include <memory>
#include <string>

#include "recourse/common/serialization.hpp"
#include "recourse/data/dataset.hpp"
#include "recourse/data/scaling.hpp"
#include "recourse/data/stats.hpp"
#include "recourse/mdp/environment.hpp"
#include "recourse/mdp/manifold.hpp"
#include "recourse/model/classifier.hpp"

namespace recourse::mdp {

enum class DistF { kZero, kPercentile };

struct RewardConfig {
  double lambda = 0.0;        // weight of the manifold-distance cost
  double cf_reward = 100.0;   // reward for reaching the desired label
  double gamma = 0.99;
  DistF dist_f = DistF::kZero;
  double max_step_frac = 0.1; // fraction of the scaled domain width
  std::size_t step_cap = 200;

  void validate() const;
};

json reward_config_to_json(const RewardConfig& cfg);
// Missing keys keep their defaults; unknown dist_f values are ConfigError.
RewardConfig reward_config_from_json(const json& node);

// The CFE problem as an MDP over scaled states:
//   s' = transition(s, a)
//   r  = CF(s') - DistF(s, s') - lambda * DistD(s')
// where CF(s') = cf_reward when f(s') has the desired label and p_L(s')
// otherwise, and DistD is the l1 distance to the nearest training state.
class CfeMdp final : public Environment {
 public:
  CfeMdp(data::FeatureSchema schema, causal::CausalModel cm, std::shared_ptr<const model::Classifier> clf,
         std::shared_ptr<const ManifoldIndex> manifold, data::ScalingTransform scaler, data::TrainStats stats,
         RewardConfig cfg, std::string schema_fingerprint);

  StepResult step(std::span<const double> s, const Action& a, Rng& rng) const override;
  bool is_goal(std::span<const double> s) const override;
  double desired_probability(std::span<const double> s) const override;
  double manifold_distance(std::span<const double> s) const override { return manifold_->distance(s); }
  std::string fingerprint() const override { return fingerprint_; }

  // Reward for landing in `next` after leaving `s` (no transition sampled).
  double reward(std::span<const double> s, std::span<const double> next, bool* terminal = nullptr) const;
  double action_cost(std::span<const double> s, std::span<const double> next) const;

  const model::Classifier& classifier() const { return *clf_; }
  const ManifoldIndex& manifold() const { return *manifold_; }
  const data::ScalingTransform& scaler() const { return scaler_; }
  const data::TrainStats& stats() const { return stats_; }
  const RewardConfig& config() const { return cfg_; }
  int desired_label() const { return schema().desired_label(); }

 private:
  std::shared_ptr<const model::Classifier> clf_;
  std::shared_ptr<const ManifoldIndex> manifold_;
  data::ScalingTransform scaler_;
  data::TrainStats stats_;
  RewardConfig cfg_;
  std::string fingerprint_;
};

// Scaled train-split rows, the reference set of the manifold distance.
std::vector<State> scaled_rows(const data::Dataset& ds, const data::ScalingTransform& scaler,
                               std::span<const std::size_t> rows);
std::vector<bool> categorical_mask(const data::FeatureSchema& schema);

// Assembles the MDP from a dataset (train split as manifold reference and
// statistics), a trained classifier and a causal model.
std::shared_ptr<CfeMdp> build_mdp(const data::Dataset& ds, std::shared_ptr<const model::Classifier> clf,
                                  causal::CausalModel cm, const RewardConfig& cfg,
                                  const std::string& schema_fingerprint = {});

}  // namespace recourse::mdp

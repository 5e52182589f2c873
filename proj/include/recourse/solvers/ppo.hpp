#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "recourse/common/serialization.hpp"
#include "recourse/data/dataset.hpp"
#include "recourse/mdp/cfe_mdp.hpp"
#include "recourse/solvers/actor_critic.hpp"

namespace recourse::solvers {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  std::size_t epochs_per_batch = 10;
  std::size_t rollout_batch_size = 2048;
  std::size_t minibatch_size = 256;
  double lr_actor = 3e-4;
  double lr_critic = 1e-3;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double init_log_std = -0.5;
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t total_env_steps = 100000;
  std::size_t episode_step_cap = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

json ppo_config_to_json(const PpoConfig& cfg);
PpoConfig ppo_config_from_json(const json& node);

struct TrainingPoint {
  std::size_t env_steps = 0;
  double mean_episode_return = 0.0;  // undiscounted, episodes finished in the batch
  double terminal_rate = 0.0;        // fraction of those episodes that reached a terminal state
  std::size_t episodes = 0;
};

inline constexpr int kPolicyArtifactVersion = 1;

struct PolicyArtifact {
  std::string schema_fingerprint;
  PpoConfig config;
  json environment;  // free-form description of the training MDP
  ActorCritic networks;
  std::vector<TrainingPoint> curve;
};

enum class ActMode { kSample, kGreedy };

// Throws FingerprintMismatch when the artifact was trained for another MDP.
void check_fingerprint(const PolicyArtifact& artifact, const mdp::Environment& env);
Action act(const PolicyArtifact& artifact, std::span<const double> state, ActMode mode, Rng& rng);

using StartSampler = std::function<State(Rng&)>;

// Uniform over the given states.
StartSampler uniform_start_sampler(std::vector<State> starts);
// Train-split rows the classifier does not assign the desired label
// (scaled). Throws NoNegativeDatapoints when there are none.
std::vector<State> negative_train_states(const mdp::CfeMdp& mdp, const data::Dataset& ds);
std::vector<State> negative_states(const mdp::CfeMdp& mdp, const data::Dataset& ds,
                                   std::span<const std::size_t> rows);

using ProgressCallback = std::function<void(const TrainingPoint&)>;

// Proximal policy optimization with GAE on a single thread. Every episode
// starts from `sampler` and runs until a terminal step or
// cfg.episode_step_cap; unfinished episodes are bootstrapped with the
// critic. Deterministic given cfg.seed.
PolicyArtifact ppo_train(const mdp::Environment& env, const StartSampler& sampler, const PpoConfig& cfg,
                         const ProgressCallback& progress = {});

json policy_to_json(const PolicyArtifact& artifact);
PolicyArtifact policy_from_json(const json& node);
void save_policy(const PolicyArtifact& artifact, const std::string& path);
PolicyArtifact load_policy(const std::string& path);

}  // namespace recourse::solvers

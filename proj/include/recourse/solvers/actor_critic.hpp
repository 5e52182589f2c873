#pragma once

#include <span>
#include <string>
#include <vector>

#include "recourse/common/random.hpp"
#include "recourse/common/serialization.hpp"
#include "recourse/mdp/environment.hpp"
#include "recourse/model/mlp.hpp"

namespace recourse::solvers {

// One actionable feature as seen by the actor.
struct ActionSlot {
  std::size_t feature = 0;
  std::string name;
  bool categorical = false;
  data::Monotone monotone = data::Monotone::kNone;
  double max_step = 0.0;
};

struct SampledAction {
  std::size_t slot = 0;
  double z = 0.0;         // pre-squash magnitude sample
  double log_prob = 0.0;
  Action action;
};

// Factorized stochastic policy plus state-value critic.
//   feature  ~ softmax(logits(s))          over actionable features only
//   z        ~ N(mu_k(s), exp(log_std_k))  magnitude of the chosen feature
//   u = tanh(z) maps to a step within the feature's bounds:
//     numerical, free        delta = u * max_step
//     numerical, monotone    delta = +-(u + 1) / 2 * max_step
//     categorical, free      delta = sign(u) (+1 when u = 0)
//     categorical, monotone  delta = the allowed direction (z not used)
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(std::vector<ActionSlot> slots, std::vector<std::size_t> category_counts,
              const std::vector<std::size_t>& hidden, double init_log_std, Rng& rng);

  static std::vector<ActionSlot> slots_for(const mdp::Environment& env);
  static std::vector<std::size_t> category_counts_for(const data::FeatureSchema& schema);

  std::size_t num_slots() const { return slots_.size(); }
  std::size_t state_dim() const { return category_counts_.size(); }
  const std::vector<ActionSlot>& slots() const { return slots_; }
  const std::vector<std::size_t>& category_counts() const { return category_counts_; }

  // Maps a state into [-1, 1]^d (categorical codes spread evenly).
  void normalize(std::span<const double> state, std::span<double> out) const;

  struct Head {
    std::vector<double> probs;  // per slot
    std::vector<double> mean;   // per slot
  };
  Head head(std::span<const double> state) const;
  // Probability of each schema feature being selected (0 for features
  // without a slot).
  std::vector<double> feature_probabilities(std::span<const double> state) const;

  bool uses_magnitude(std::size_t slot) const;
  Action to_action(std::size_t slot, double z) const;
  double log_prob(const Head& head, std::size_t slot, double z) const;

  SampledAction sample(std::span<const double> state, Rng& rng) const;
  // Most likely feature, magnitude at the mean. Deterministic.
  Action greedy(std::span<const double> state) const;
  double value(std::span<const double> state) const;

  model::Mlp& actor() { return actor_; }
  model::Mlp& critic() { return critic_; }
  const model::Mlp& actor() const { return actor_; }
  const model::Mlp& critic() const { return critic_; }
  std::vector<double>& log_std() { return log_std_; }
  const std::vector<double>& log_std() const { return log_std_; }

  json to_json() const;
  static ActorCritic from_json(const json& node);

 private:
  std::vector<ActionSlot> slots_;
  std::vector<std::size_t> category_counts_;
  model::Mlp actor_;   // outputs [logits (K), means (K)]
  model::Mlp critic_;  // outputs v(s)
  std::vector<double> log_std_;
};

double tanh_squash_step(const ActionSlot& slot, double z);

}  // namespace recourse::solvers

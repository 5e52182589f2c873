#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recourse/causal/causal_model.hpp"
#include "recourse/common/random.hpp"
#include "recourse/data/schema.hpp"
#include "recourse/mdp/types.hpp"

namespace recourse::mdp {

struct ActionFeature {
  std::size_t feature;   // index into the state vector
  bool categorical;
  data::Monotone monotone;
  double lo;             // state bounds
  double hi;
  double max_step;       // state units; 1 for categorical
};

// Actionable features (ActF) in schema order, with per-feature step bounds.
class ActionSpace {
 public:
  ActionSpace() = default;
  ActionSpace(const data::FeatureSchema& schema, const causal::CausalModel& cm, double max_step_frac);

  const std::vector<ActionFeature>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  // Position of `feature` among the actionable features, if actionable.
  std::optional<std::size_t> slot_of(std::size_t feature) const;

  // Finite action set used by the greedy/random baselines and exhaustive
  // search: per numerical feature +max, -max, +max/2, -max/2; per categorical
  // feature +1, -1. Directions forbidden by monotonicity are kept (they are
  // identity transitions).
  const std::vector<Action>& discrete_actions() const { return discrete_; }

 private:
  std::vector<ActionFeature> features_;
  std::vector<Action> discrete_;
};

struct StepResult {
  State next;
  double reward = 0.0;
  bool terminal = false;
};

// Common base of the CFE MDP and the toy MDPs: state layout, legality and
// the causal transition. Subclasses supply reward and termination.
class Environment {
 public:
  Environment(data::FeatureSchema schema, causal::CausalModel cm, double max_step_frac, double gamma,
              std::size_t step_cap);
  virtual ~Environment() = default;

  const data::FeatureSchema& schema() const { return schema_; }
  const causal::CausalModel& causal_model() const { return causal_; }
  const ActionSpace& action_space() const { return action_space_; }
  const std::vector<Action>& discrete_actions() const { return action_space_.discrete_actions(); }
  std::size_t state_dim() const { return schema_.size(); }
  double gamma() const { return gamma_; }
  std::size_t step_cap() const { return step_cap_; }

  // Why the transition would treat `a` as a no-op at `s`, if it would.
  std::optional<causal::Violation> check_action(std::span<const double> s, const Action& a) const;
  bool is_legal(std::span<const double> s, const Action& a) const { return !check_action(s, a); }

  // Disallowed actions return `s` unchanged; otherwise the action is applied
  // and endogenous updates are sampled from `rng`.
  State transition(std::span<const double> s, const Action& a, Rng& rng) const;
  std::vector<WeightedState> transition_distribution(std::span<const double> s, const Action& a) const;

  // Throws DimensionMismatch / OutOfDomainValue for states outside S.
  void validate_state(std::span<const double> s) const;

  virtual StepResult step(std::span<const double> s, const Action& a, Rng& rng) const = 0;
  // True when `s` already has the desired label.
  virtual bool is_goal(std::span<const double> s) const = 0;
  // True when `s` is the state a user is aiming for. Defaults to is_goal.
  virtual bool is_counterfactual(std::span<const double> s) const { return is_goal(s); }
  virtual double desired_probability(std::span<const double> s) const = 0;
  virtual double manifold_distance(std::span<const double> s) const = 0;
  virtual std::string fingerprint() const = 0;

 private:
  data::FeatureSchema schema_;
  causal::CausalModel causal_;
  ActionSpace action_space_;
  double gamma_;
  std::size_t step_cap_;
};

}  // namespace recourse::mdp

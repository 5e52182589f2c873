#pragma once

#include <memory>
#include <string>

#include "recourse/mdp/environment.hpp"
#include "recourse/mdp/toy.hpp"
#include "recourse/solvers/ppo.hpp"
#include "recourse/solvers/value_iteration.hpp"

namespace recourse::solvers {

// Chooses the next action of a rollout.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Action act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const = 0;
  // Throws when the policy was built for a different environment.
  virtual void check_compatible(const mdp::Environment&) const {}
};

class PpoPolicy final : public Policy {
 public:
  explicit PpoPolicy(std::shared_ptr<const PolicyArtifact> artifact, ActMode mode = ActMode::kGreedy)
      : artifact_(std::move(artifact)), mode_(mode) {}
  std::string name() const override { return "policy"; }
  Action act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const override;
  void check_compatible(const mdp::Environment& env) const override { check_fingerprint(*artifact_, env); }
  const PolicyArtifact& artifact() const { return *artifact_; }

 private:
  std::shared_ptr<const PolicyArtifact> artifact_;
  ActMode mode_;
};

// Looks up the value-iteration action of a toy MDP state.
class TabularPolicyAdapter final : public Policy {
 public:
  TabularPolicyAdapter(std::shared_ptr<const mdp::ToyMdp> mdp, TabularPolicy table)
      : mdp_(std::move(mdp)), table_(std::move(table)) {}
  std::string name() const override { return "value_iteration"; }
  Action act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const override;
  void check_compatible(const mdp::Environment& env) const override;
  const TabularPolicy& table() const { return table_; }

 private:
  std::shared_ptr<const mdp::ToyMdp> mdp_;
  TabularPolicy table_;
};

// Scores every discrete action by the reward of its (sampled) outcome and
// takes the best, lowest index on ties. Candidates are scored with copies
// of the rollout's random stream, so the chosen outcome is the one that
// the rollout then realizes.
class GreedyBaseline final : public Policy {
 public:
  std::string name() const override { return "greedy"; }
  Action act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const override;
};

// Uniform over the discrete actions that are legal at the state (over all
// discrete actions when none is legal).
class RandomBaseline final : public Policy {
 public:
  std::string name() const override { return "random"; }
  Action act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const override;
};

}  // namespace recourse::solvers

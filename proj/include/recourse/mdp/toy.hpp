#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "recourse/mdp/environment.hpp"

namespace recourse::mdp {

struct Outcome {
  double probability;
  std::size_t next;
  double reward;
};

// Finite MDP with indexed states and actions, for exact solvers.
class EnumerableMdp {
 public:
  virtual ~EnumerableMdp() = default;
  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::vector<Outcome> outcomes(std::size_t state, std::size_t action) const = 0;
};

enum class ToyFixture {
  kExample1,    // a, b in {0,1,2}, no constraints
  kExample2,    // age a and education b non-decreasing, race r immutable, b+1 may raise a
  kAppendixC1,  // two features, a non-decreasing
  kAppendixC2,  // three features, a non-decreasing, r immutable
  kAppendixC3,  // kExample2 with a penalty for unrealistic states
  kAppendixC4,  // kExample2 with per-feature action costs
};

std::string_view to_string(ToyFixture fixture);
std::optional<ToyFixture> parse_toy_fixture(std::string_view name);
const std::vector<ToyFixture>& all_toy_fixtures();

// Grid MDPs over small categorical features. Every action costs its feature's
// cost (1 unless kAppendixC4); any action taken in the green state (a, b) =
// (2, 2) enters the absorbing terminal state with +10. In the Environment view
// that step reports terminal = true and leaves the feature values unchanged.
class ToyMdp final : public Environment, public EnumerableMdp {
 public:
  explicit ToyMdp(ToyFixture fixture, double gamma = 0.99, std::size_t step_cap = 200);

  static constexpr double kTerminalReward = 10.0;
  static constexpr double kUnrealisticPenalty = -5.0;

  ToyFixture fixture() const { return fixture_; }

  StepResult step(std::span<const double> s, const Action& a, Rng& rng) const override;
  bool is_goal(std::span<const double>) const override { return false; }
  bool is_counterfactual(std::span<const double> s) const override { return is_green(s); }
  double desired_probability(std::span<const double> s) const override { return is_green(s) ? 1.0 : 0.0; }
  double manifold_distance(std::span<const double> s) const override;
  std::string fingerprint() const override;

  bool is_green(std::span<const double> s) const;
  double action_cost(const Action& a) const;
  // Extra reward for entering `s` (the unrealistic-state penalty).
  double entry_reward(std::span<const double> s) const;

  // Enumerable view: grid states in lexicographic order of their codes
  // (first feature most significant), then the terminal state.
  std::size_t num_states() const override { return grid_states_.size() + 1; }
  std::size_t num_actions() const override { return discrete_actions().size(); }
  std::vector<Outcome> outcomes(std::size_t state, std::size_t action) const override;

  std::size_t terminal_index() const { return grid_states_.size(); }
  const State& state_at(std::size_t index) const { return grid_states_.at(index); }
  std::size_t index_of(std::span<const double> s) const;
  // All grid states except the terminal one.
  const std::vector<State>& grid_states() const { return grid_states_; }

 private:
  ToyFixture fixture_;
  std::vector<State> grid_states_;
  std::vector<State> unrealistic_;
};

}  // namespace recourse::mdp

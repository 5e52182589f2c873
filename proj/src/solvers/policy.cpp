#include "recourse/solvers/policy.hpp"

#include <algorithm>

#include "recourse/common/error.hpp"

namespace recourse::solvers {

Action PpoPolicy::act(const mdp::Environment&, std::span<const double> state, Rng& rng) const {
  return solvers::act(*artifact_, state, mode_, rng);
}

Action TabularPolicyAdapter::act(const mdp::Environment&, std::span<const double> state, Rng&) const {
  return mdp_->discrete_actions()[table_.action.at(mdp_->index_of(state))];
}

void TabularPolicyAdapter::check_compatible(const mdp::Environment& env) const {
  if (env.fingerprint() != mdp_->fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch, "tabular policy belongs to " + mdp_->fingerprint());
  }
}

Action GreedyBaseline::act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const {
  const auto& actions = env.discrete_actions();
  std::size_t best = 0;
  double best_reward = -INFINITY;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Rng probe = rng;
    const double r = env.step(state, actions[i], probe).reward;
    if (r > best_reward) {
      best_reward = r;
      best = i;
    }
  }
  return actions[best];
}

Action RandomBaseline::act(const mdp::Environment& env, std::span<const double> state, Rng& rng) const {
  const auto& actions = env.discrete_actions();
  std::vector<std::size_t> legal;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (env.is_legal(state, actions[i])) legal.push_back(i);
  }
  const std::size_t n = legal.empty() ? actions.size() : legal.size();
  const auto pick = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  return actions[legal.empty() ? pick : legal[pick]];
}

}  // namespace recourse::solvers

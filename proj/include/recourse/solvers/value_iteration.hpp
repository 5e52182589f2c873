#pragma once

#include <cstddef>
#include <vector>

#include "recourse/mdp/environment.hpp"
#include "recourse/mdp/toy.hpp"

namespace recourse::solvers {

struct TabularPolicy {
  std::vector<std::size_t> action;      // per state index
  std::vector<double> value;            // optimal state values
  std::vector<std::vector<double>> q;   // q[state][action]
  std::size_t iterations = 0;
  double residual = 0.0;                // final sup-norm Bellman residual
};

// Synchronous value iteration until the sup-norm Bellman residual drops
// below `tol`. The policy takes the best action, preferring the lowest index
// among actions within 1e-9 of the best value.
TabularPolicy value_iteration(const mdp::EnumerableMdp& mdp, double gamma, double tol = 1e-8,
                              std::size_t max_iterations = 1000000);

// Exact expected discounted return of a fixed deterministic policy
// (`action[s]` per state), by iterating its Bellman equation to `tol`.
std::vector<double> policy_evaluation(const mdp::EnumerableMdp& mdp, const std::vector<std::size_t>& action,
                                      double gamma, double tol = 1e-10);

// Value iteration at env.gamma(). Throws NotEnumerable unless `env` also
// exposes an enumerable view.
TabularPolicy solve_environment(const mdp::Environment& env, double tol = 1e-8);

}  // namespace recourse::solvers

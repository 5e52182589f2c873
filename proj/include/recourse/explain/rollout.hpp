#pragma once

#include <cstdint>
#include <vector>

#include "recourse/explain/path.hpp"
#include "recourse/mdp/environment.hpp"
#include "recourse/solvers/policy.hpp"

namespace recourse::explain {

// Follows `policy` from s0 until a terminal step or `step_cap` steps. A
// start state that already has the desired label gives a valid 0-step
// path. wall_time covers the loop only.
CfePath rollout(const solvers::Policy& policy, const mdp::Environment& env, std::span<const double> s0,
                std::size_t step_cap, Rng& rng);

// One rollout per start state; start i uses the stream derive_seed(seed, i).
// `threads` > 1 runs rollouts concurrently; results are identical to the
// sequential run apart from wall times.
std::vector<CfePath> rollout_batch(const solvers::Policy& policy, const mdp::Environment& env,
                                   const std::vector<State>& starts, std::size_t step_cap, std::uint64_t seed,
                                   std::size_t threads = 1);

}  // namespace recourse::explain

#pragma once

#include <vector>

#include "recourse/mdp/types.hpp"

namespace recourse::explain {

struct PathStep {
  State before;
  Action action;
  State after;
  double reward = 0.0;
};

// A sequential counterfactual: the states visited from `start` until a
// counterfactual state (valid) or the step cap (truncated).
struct CfePath {
  State start;
  std::vector<PathStep> steps;
  State final_state;
  bool valid = false;
  double wall_time = 0.0;  // seconds, rollout loop only

  double total_reward() const {
    double total = 0.0;
    for (const auto& s : steps) total += s.reward;
    return total;
  }
};

}  // namespace recourse::explain

#pragma once

#include <span>
#include <vector>

namespace recourse::solvers {

// Generalized advantage estimates for one trajectory segment.
//   delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// `values` has one more entry than `rewards` (the bootstrap value of the
// state after the last step); done_t marks that step t ended the episode.
std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const bool> terminal, double gamma, double lambda);

// Clipped surrogate loss for one sample: -min(r A, clip(r, 1-eps, 1+eps) A).
double ppo_clip_loss(double ratio, double advantage, double clip_epsilon);
// d loss / d ratio (0 where the clipped branch is active).
double ppo_clip_loss_grad(double ratio, double advantage, double clip_epsilon);

}  // namespace recourse::solvers

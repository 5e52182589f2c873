#include "recourse/solvers/gae.hpp"

#include <algorithm>
#include <string>

#include "recourse/common/error.hpp"

namespace recourse::solvers {

std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const bool> terminal, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || terminal.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "gae needs |values| = |rewards| + 1 = |terminal| + 1, got " +
                                                std::to_string(rewards.size()) + ", " +
                                                std::to_string(values.size()) + ", " +
                                                std::to_string(terminal.size()));
  }
  std::vector<double> adv(n);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = terminal[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
    running = delta + gamma * lambda * live * running;
    adv[t] = running;
  }
  return adv;
}

double ppo_clip_loss(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return -std::min(ratio * advantage, clipped * advantage);
}

double ppo_clip_loss_grad(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return ratio * advantage <= clipped * advantage ? -advantage : 0.0;
}

}  // namespace recourse::solvers

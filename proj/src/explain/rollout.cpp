#include "recourse/explain/rollout.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace recourse::explain {

CfePath rollout(const solvers::Policy& policy, const mdp::Environment& env, std::span<const double> s0,
                std::size_t step_cap, Rng& rng) {
  policy.check_compatible(env);
  CfePath path;
  path.start.assign(s0.begin(), s0.end());
  const auto t0 = std::chrono::steady_clock::now();
  State s = path.start;
  if (env.is_goal(s)) {
    path.valid = true;
  } else {
    path.steps.reserve(std::min<std::size_t>(step_cap, 64));
    for (std::size_t t = 0; t < step_cap; ++t) {
      const Action a = policy.act(env, s, rng);
      mdp::StepResult res = env.step(s, a, rng);
      path.steps.push_back({s, a, res.next, res.reward});
      s = std::move(res.next);
      if (res.terminal) {
        path.valid = true;
        break;
      }
    }
  }
  path.final_state = std::move(s);
  path.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return path;
}

std::vector<CfePath> rollout_batch(const solvers::Policy& policy, const mdp::Environment& env,
                                   const std::vector<State>& starts, std::size_t step_cap, std::uint64_t seed,
                                   std::size_t threads) {
  policy.check_compatible(env);
  std::vector<CfePath> paths(starts.size());
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < starts.size(); i += stride) {
      Rng rng(derive_seed(seed, i));
      paths[i] = rollout(policy, env, starts[i], step_cap, rng);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, starts.size()));
  if (threads == 1) {
    run(0, 1);
    return paths;
  }
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) workers.emplace_back(run, w, threads);
  for (auto& w : workers) w.join();
  return paths;
}

}  // namespace recourse::explain

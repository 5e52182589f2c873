#include "recourse/solvers/value_iteration.hpp"

#include <algorithm>
#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::solvers {

namespace {

constexpr double kTieTolerance = 1e-9;

double backup(const std::vector<mdp::Outcome>& outcomes, const std::vector<double>& value, double gamma) {
  double q = 0.0;
  for (const auto& o : outcomes) q += o.probability * (o.reward + gamma * value[o.next]);
  return q;
}

}  // namespace

TabularPolicy value_iteration(const mdp::EnumerableMdp& mdp, double gamma, double tol,
                              std::size_t max_iterations) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kPreconditionViolated, "value iteration needs gamma in [0, 1)");
  }
  const std::size_t ns = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  if (ns == 0 || na == 0) throw Error(ErrorCode::kNotEnumerable, "MDP has no states or actions");

  std::vector<std::vector<std::vector<mdp::Outcome>>> kernel(ns, std::vector<std::vector<mdp::Outcome>>(na));
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) kernel[s][a] = mdp.outcomes(s, a);
  }

  TabularPolicy out;
  out.value.assign(ns, 0.0);
  std::vector<double> next(ns);
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    double residual = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double best = -INFINITY;
      for (std::size_t a = 0; a < na; ++a) best = std::max(best, backup(kernel[s][a], out.value, gamma));
      next[s] = best;
      residual = std::max(residual, std::abs(best - out.value[s]));
    }
    out.value.swap(next);
    out.residual = residual;
    if (residual < tol) break;
  }
  if (out.residual >= tol) throw Error(ErrorCode::kPreconditionViolated, "value iteration did not converge");

  out.q.assign(ns, std::vector<double>(na));
  out.action.assign(ns, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) out.q[s][a] = backup(kernel[s][a], out.value, gamma);
    const double best = *std::max_element(out.q[s].begin(), out.q[s].end());
    for (std::size_t a = 0; a < na; ++a) {
      if (out.q[s][a] >= best - kTieTolerance) {
        out.action[s] = a;
        break;
      }
    }
  }
  return out;
}

std::vector<double> policy_evaluation(const mdp::EnumerableMdp& mdp, const std::vector<std::size_t>& action,
                                      double gamma, double tol) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kPreconditionViolated, "policy evaluation needs gamma in [0, 1)");
  }
  const std::size_t ns = mdp.num_states();
  if (action.size() != ns) throw Error(ErrorCode::kLengthMismatch, "one action per state is required");
  std::vector<std::vector<mdp::Outcome>> kernel(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    if (action[s] >= mdp.num_actions()) throw Error(ErrorCode::kPreconditionViolated, "action index out of range");
    kernel[s] = mdp.outcomes(s, action[s]);
  }
  std::vector<double> value(ns, 0.0);
  std::vector<double> next(ns);
  for (;;) {
    double residual = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      next[s] = backup(kernel[s], value, gamma);
      residual = std::max(residual, std::abs(next[s] - value[s]));
    }
    value.swap(next);
    if (residual < tol) return value;
  }
}

TabularPolicy solve_environment(const mdp::Environment& env, double tol) {
  const auto* enumerable = dynamic_cast<const mdp::EnumerableMdp*>(&env);
  if (enumerable == nullptr) {
    throw Error(ErrorCode::kNotEnumerable, "environment has no finite state enumeration");
  }
  return value_iteration(*enumerable, env.gamma(), tol);
}

}  // namespace recourse::solvers

#include "recourse/mdp/environment.hpp"

#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::mdp {

namespace {
constexpr double kStepTolerance = 1e-9;
}

ActionSpace::ActionSpace(const data::FeatureSchema& schema, const causal::CausalModel& cm,
                         double max_step_frac) {
  if (!(max_step_frac > 0.0 && max_step_frac <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "max_step_frac must lie in (0, 1]", "max_step_frac");
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (!cm.is_actionable(j)) continue;
    const auto& f = schema.feature(j);
    const auto b = schema.state_bounds(j);
    const double max_step = f.is_categorical() ? 1.0 : max_step_frac * (b.hi - b.lo);
    features_.push_back({j, f.is_categorical(), cm.monotone(j), b.lo, b.hi, max_step});
    if (f.is_categorical()) {
      discrete_.push_back({j, 1.0});
      discrete_.push_back({j, -1.0});
    } else {
      discrete_.push_back({j, max_step});
      discrete_.push_back({j, -max_step});
      discrete_.push_back({j, max_step / 2.0});
      discrete_.push_back({j, -max_step / 2.0});
    }
  }
  if (features_.empty()) {
    throw Error(ErrorCode::kNoActionableFeatures, "schema has no actionable feature");
  }
}

std::optional<std::size_t> ActionSpace::slot_of(std::size_t feature) const {
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (features_[k].feature == feature) return k;
  }
  return std::nullopt;
}

Environment::Environment(data::FeatureSchema schema, causal::CausalModel cm, double max_step_frac,
                         double gamma, std::size_t step_cap)
    : schema_(std::move(schema)),
      causal_(std::move(cm)),
      action_space_(schema_, causal_, max_step_frac),
      gamma_(gamma),
      step_cap_(step_cap) {
  if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw Error(ErrorCode::kConfigError, "gamma must lie in [0, 1]", "gamma");
  if (causal_.num_features() != schema_.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "causal model was built for a different schema");
  }
}

std::optional<causal::Violation> Environment::check_action(std::span<const double> s, const Action& a) const {
  if (auto v = causal::check_action(causal_, schema_, s, a)) return v;
  const auto slot = action_space_.slot_of(a.feature);
  const auto& f = schema_.feature(a.feature);
  if (a.delta == 0.0 || std::abs(a.delta) > action_space_.features()[*slot].max_step + kStepTolerance) {
    return causal::Violation{causal::ViolationKind::kInvalidStep, a.feature, "step:" + f.name,
                             "step on '" + f.name + "' must be non-zero and at most the per-step maximum"};
  }
  return std::nullopt;
}

State Environment::transition(std::span<const double> s, const Action& a, Rng& rng) const {
  if (check_action(s, a)) return State(s.begin(), s.end());
  return causal::apply_action(causal_, schema_, s, a, rng);
}

std::vector<WeightedState> Environment::transition_distribution(std::span<const double> s,
                                                                const Action& a) const {
  if (check_action(s, a)) return {{1.0, State(s.begin(), s.end())}};
  return causal::action_outcomes(causal_, schema_, s, a);
}

void Environment::validate_state(std::span<const double> s) const {
  if (s.size() != schema_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "state has width " + std::to_string(s.size()) +
                                                   ", schema has " + std::to_string(schema_.size()));
  }
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto b = schema_.state_bounds(j);
    const auto& f = schema_.feature(j);
    const bool integral = !f.is_categorical() || s[j] == std::round(s[j]);
    if (!std::isfinite(s[j]) || s[j] < b.lo - kStepTolerance || s[j] > b.hi + kStepTolerance || !integral) {
      throw Error(ErrorCode::kOutOfDomainValue, "value of '" + f.name + "' is outside its domain", f.name);
    }
  }
}

}  // namespace recourse::mdp

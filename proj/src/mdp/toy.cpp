#include "recourse/mdp/toy.hpp"

#include <algorithm>

#include "recourse/common/error.hpp"

namespace recourse::mdp {

namespace {

using data::FeatureSpec;
using data::Monotone;
using data::Mutability;

FeatureSpec grid_feature(std::string name, std::size_t k, Mutability mutability = Mutability::kActionable,
                         Monotone monotone = Monotone::kNone) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = data::FeatureKind::kCategorical;
  for (std::size_t c = 0; c < k; ++c) f.categories.push_back(std::to_string(c));
  f.mutability = mutability;
  f.monotone = monotone;
  return f;
}

bool has_race(ToyFixture fixture) { return fixture != ToyFixture::kExample1 && fixture != ToyFixture::kAppendixC1; }

bool has_education_edge(ToyFixture fixture) {
  return fixture == ToyFixture::kExample2 || fixture == ToyFixture::kAppendixC3 ||
         fixture == ToyFixture::kAppendixC4;
}

data::FeatureSchema toy_schema(ToyFixture fixture) {
  std::vector<FeatureSpec> features;
  if (fixture == ToyFixture::kExample1) {
    features.push_back(grid_feature("a", 3));
    features.push_back(grid_feature("b", 3));
  } else {
    features.push_back(grid_feature("a", 3, Mutability::kActionable, Monotone::kNonDecreasing));
    const bool b_monotone = has_education_edge(fixture);
    features.push_back(grid_feature("b", 3, Mutability::kActionable,
                                    b_monotone ? Monotone::kNonDecreasing : Monotone::kNone));
    if (has_race(fixture)) features.push_back(grid_feature("r", 2, Mutability::kImmutable));
  }
  return data::FeatureSchema(std::move(features), "label", 1);
}

causal::CausalModel toy_causal(ToyFixture fixture, const data::FeatureSchema& schema) {
  if (!has_education_edge(fixture)) return causal::CausalModel(schema);
  causal::CausalEdge edge;
  edge.parent = 1;
  edge.child = 0;
  edge.trigger = causal::Trigger::kOnIncrease;
  edge.effects = {{0.5, 0.0}, {0.5, 1.0}};
  return causal::CausalModel(schema, {}, {edge});
}

}  // namespace

std::string_view to_string(ToyFixture fixture) {
  switch (fixture) {
    case ToyFixture::kExample1: return "example1";
    case ToyFixture::kExample2: return "example2";
    case ToyFixture::kAppendixC1: return "appendix_c1";
    case ToyFixture::kAppendixC2: return "appendix_c2";
    case ToyFixture::kAppendixC3: return "appendix_c3";
    case ToyFixture::kAppendixC4: return "appendix_c4";
  }
  return "example1";
}

std::optional<ToyFixture> parse_toy_fixture(std::string_view name) {
  for (auto f : all_toy_fixtures()) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

const std::vector<ToyFixture>& all_toy_fixtures() {
  static const std::vector<ToyFixture> fixtures = {ToyFixture::kExample1,   ToyFixture::kExample2,
                                                   ToyFixture::kAppendixC1, ToyFixture::kAppendixC2,
                                                   ToyFixture::kAppendixC3, ToyFixture::kAppendixC4};
  return fixtures;
}

ToyMdp::ToyMdp(ToyFixture fixture, double gamma, std::size_t step_cap)
    : Environment(toy_schema(fixture), toy_causal(fixture, toy_schema(fixture)), 1.0, gamma, step_cap),
      fixture_(fixture) {
  const std::size_t n = schema().size();
  std::size_t total = 1;
  for (const auto& f : schema().features()) total *= f.categories.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    State s(n);
    std::size_t rest = idx;
    for (std::size_t j = n; j-- > 0;) {
      const std::size_t k = schema().feature(j).categories.size();
      s[j] = static_cast<double>(rest % k);
      rest /= k;
    }
    grid_states_.push_back(std::move(s));
  }
  if (fixture_ == ToyFixture::kAppendixC3) unrealistic_ = {{0, 2, 0}, {0, 2, 1}, {2, 0, 1}};
}

bool ToyMdp::is_green(std::span<const double> s) const { return s[0] == 2.0 && s[1] == 2.0; }

double ToyMdp::action_cost(const Action& a) const {
  if (fixture_ == ToyFixture::kAppendixC4) return a.feature == 1 ? 2.0 : 1.0;
  return 1.0;
}

double ToyMdp::entry_reward(std::span<const double> s) const {
  for (const auto& u : unrealistic_) {
    if (std::equal(u.begin(), u.end(), s.begin(), s.end())) return kUnrealisticPenalty;
  }
  return 0.0;
}

double ToyMdp::manifold_distance(std::span<const double> s) const {
  return entry_reward(s) < 0.0 ? 1.0 : 0.0;
}

std::string ToyMdp::fingerprint() const { return "toy:" + std::string(to_string(fixture_)); }

StepResult ToyMdp::step(std::span<const double> s, const Action& a, Rng& rng) const {
  StepResult out;
  if (is_green(s)) {
    out.next.assign(s.begin(), s.end());
    out.reward = -action_cost(a) + kTerminalReward;
    out.terminal = true;
    return out;
  }
  out.next = transition(s, a, rng);
  out.reward = -action_cost(a) + entry_reward(out.next);
  return out;
}

std::size_t ToyMdp::index_of(std::span<const double> s) const {
  for (std::size_t i = 0; i < grid_states_.size(); ++i) {
    if (std::equal(grid_states_[i].begin(), grid_states_[i].end(), s.begin(), s.end())) return i;
  }
  throw Error(ErrorCode::kOutOfDomainValue, "state is not part of the toy grid");
}

std::vector<Outcome> ToyMdp::outcomes(std::size_t state, std::size_t action) const {
  if (state > terminal_index() || action >= num_actions()) {
    throw Error(ErrorCode::kPreconditionViolated, "state or action index out of range");
  }
  if (state == terminal_index()) return {{1.0, state, 0.0}};
  const Action& a = discrete_actions()[action];
  const State& s = grid_states_[state];
  if (is_green(s)) return {{1.0, terminal_index(), -action_cost(a) + kTerminalReward}};
  std::vector<Outcome> out;
  for (const auto& w : transition_distribution(s, a)) {
    out.push_back({w.probability, index_of(w.state), -action_cost(a) + entry_reward(w.state)});
  }
  return out;
}

}  // namespace recourse::mdp

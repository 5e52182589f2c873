#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recourse/common/random.hpp"
#include "recourse/common/serialization.hpp"
#include "recourse/data/schema.hpp"
#include "recourse/explain/path.hpp"
#include "recourse/mdp/types.hpp"

namespace recourse::causal {

enum class Trigger { kOnIncrease, kOnDecrease, kOnAnyChange };

std::string_view to_string(Trigger trigger);

// One outcome of an endogenous update. `delta` is in original units for
// numerical children and in category codes for categorical children.
struct Effect {
  double probability = 1.0;
  double delta = 0.0;
};

struct CausalEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  Trigger trigger = Trigger::kOnIncrease;
  std::vector<Effect> effects;
};

struct UnaryConstraint {
  std::size_t feature = 0;
  data::Monotone monotone = data::Monotone::kNone;
};

// Unary constraints, binary (parent -> child) edges and the immutable set,
// merged with the mutability/monotonicity declared in the feature schema.
// Any subset may be empty: missing knowledge means unconstrained.
class CausalModel {
 public:
  CausalModel() = default;
  CausalModel(const data::FeatureSchema& schema, std::vector<UnaryConstraint> unary = {},
              std::vector<CausalEdge> edges = {}, std::vector<std::size_t> immutable = {});

  // Parses the "causal" section of a schema document; nullptr means none.
  static CausalModel from_json(const json* section, const data::FeatureSchema& schema);
  json to_json(const data::FeatureSchema& schema) const;

  std::size_t num_features() const { return monotone_.size(); }
  data::Monotone monotone(std::size_t feature) const { return monotone_.at(feature); }
  bool is_immutable(std::size_t feature) const { return immutable_.at(feature); }
  bool is_actionable(std::size_t feature) const { return actionable_.at(feature); }

  const std::vector<UnaryConstraint>& unary() const { return unary_; }
  const std::vector<CausalEdge>& edges() const { return edges_; }
  const std::vector<std::size_t>& immutable_features() const { return immutable_list_; }
  // Indices into edges() whose parent is `feature`.
  const std::vector<std::size_t>& outgoing(std::size_t feature) const { return outgoing_.at(feature); }
  // Parents before children.
  const std::vector<std::size_t>& topological_order() const { return topo_order_; }
  bool has_ancestor_in(std::size_t feature, const std::vector<bool>& changed) const;

 private:
  std::vector<UnaryConstraint> unary_;
  std::vector<CausalEdge> edges_;
  std::vector<std::size_t> immutable_list_;
  std::vector<data::Monotone> monotone_;
  std::vector<bool> immutable_;
  std::vector<bool> actionable_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<std::vector<std::size_t>> incoming_;
  std::vector<std::size_t> topo_order_;
};

enum class ViolationKind { kImmutable, kNotActionable, kMonotone, kOutOfDomain, kInvalidStep };

struct Violation {
  ViolationKind kind;
  std::size_t feature;
  // Short machine-readable tag, e.g. "non_decreasing:age", "immutable:race".
  std::string constraint;
  std::string message;
};

// Reason the action would be rejected by the transition, if any: targets an
// immutable or non-actionable feature, moves a monotone feature the wrong
// way, leaves the feature's domain, or is not a +-1 step on a categorical.
std::optional<Violation> check_action(const CausalModel& cm, const data::FeatureSchema& schema,
                                      std::span<const double> state, const Action& action);

bool is_action_allowed(const CausalModel& cm, const data::FeatureSchema& schema,
                       std::span<const double> state, const Action& action);

struct FeatureDelta {
  std::size_t feature;
  double delta;  // original units / category codes
};

// Samples one effect from every edge leaving `changed_feature` whose trigger
// matches `direction` (+1 increase, -1 decrease).
std::vector<FeatureDelta> endogenous_updates(const CausalModel& cm, std::size_t changed_feature,
                                             int direction, Rng& rng);

// Applies an allowed action and propagates endogenous updates once, in
// topological order. Children are clamped to their domains.
State apply_action(const CausalModel& cm, const data::FeatureSchema& schema,
                   std::span<const double> state, const Action& action, Rng& rng);

// Exact distribution of apply_action over next states (duplicates merged).
std::vector<WeightedState> action_outcomes(const CausalModel& cm, const data::FeatureSchema& schema,
                                           std::span<const double> state, const Action& action);

// One recorded step is causal when it leaves the state unchanged (a rejected
// action) or when its action is allowed and `after` is a possible outcome.
bool step_respects_causality(const CausalModel& cm, const data::FeatureSchema& schema,
                             std::span<const double> before, const Action& action,
                             std::span<const double> after);

// Single-shot check on endpoints: immutable features fixed, monotone
// features moved only in their direction, values in domain, and
// non-actionable features changed only when one of their ancestors changed.
bool endpoint_respects_causality(const CausalModel& cm, const data::FeatureSchema& schema,
                                 std::span<const double> start, std::span<const double> end);

// Sequential paths are checked step by step (and for continuity); paths with
// no recorded steps are checked on their endpoints.
bool path_respects_causality(const CausalModel& cm, const data::FeatureSchema& schema,
                             const explain::CfePath& path);

}  // namespace recourse::causal

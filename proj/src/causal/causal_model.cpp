#include "recourse/causal/causal_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "recourse/common/error.hpp"

namespace recourse::causal {

namespace {

constexpr double kTolerance = 1e-9;

Trigger parse_trigger(std::string_view text) {
  if (text == "on_increase") return Trigger::kOnIncrease;
  if (text == "on_decrease") return Trigger::kOnDecrease;
  if (text == "on_any_change") return Trigger::kOnAnyChange;
  throw Error(ErrorCode::kInvalidCausalModel, "unknown trigger '" + std::string(text) + "'", "trigger");
}

bool trigger_matches(Trigger trigger, int direction) {
  switch (trigger) {
    case Trigger::kOnIncrease: return direction > 0;
    case Trigger::kOnDecrease: return direction < 0;
    case Trigger::kOnAnyChange: return direction != 0;
  }
  return false;
}

// Factor converting a delta in original units into state units.
double delta_factor(const data::FeatureSpec& f) {
  return f.is_numerical() ? 2.0 / (f.hi - f.lo) : 1.0;
}

double clamp_to_state(const data::FeatureSchema& schema, std::size_t feature, double value) {
  const auto b = schema.state_bounds(feature);
  if (schema.feature(feature).is_categorical()) value = std::round(value);
  return std::clamp(value, b.lo, b.hi);
}

int sign_of(double change) {
  if (change > kTolerance) return 1;
  if (change < -kTolerance) return -1;
  return 0;
}

std::size_t resolve(const data::FeatureSchema& schema, const json& node, const char* key) {
  const auto name = node.at(key).get<std::string>();
  const auto idx = schema.index_of(name);
  if (!idx) throw Error(ErrorCode::kInvalidCausalModel, "unknown feature '" + name + "'", name);
  return *idx;
}

bool same_state(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kTolerance) return false;
  }
  return true;
}

std::string constraint_tag(std::string_view kind, const data::FeatureSpec& f) {
  return std::string(kind) + ":" + f.name;
}

}  // namespace

std::string_view to_string(Trigger trigger) {
  switch (trigger) {
    case Trigger::kOnIncrease: return "on_increase";
    case Trigger::kOnDecrease: return "on_decrease";
    case Trigger::kOnAnyChange: return "on_any_change";
  }
  return "on_increase";
}

CausalModel::CausalModel(const data::FeatureSchema& schema, std::vector<UnaryConstraint> unary,
                         std::vector<CausalEdge> edges, std::vector<std::size_t> immutable)
    : unary_(std::move(unary)), edges_(std::move(edges)), immutable_list_(std::move(immutable)) {
  const std::size_t n = schema.size();
  monotone_.resize(n);
  immutable_.resize(n);
  actionable_.resize(n);
  outgoing_.resize(n);
  incoming_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& f = schema.feature(j);
    monotone_[j] = f.monotone;
    immutable_[j] = f.mutability == data::Mutability::kImmutable;
    actionable_[j] = f.mutability == data::Mutability::kActionable;
  }
  for (auto j : immutable_list_) {
    if (j >= n) throw Error(ErrorCode::kInvalidCausalModel, "immutable feature index out of range");
    immutable_[j] = true;
    actionable_[j] = false;
  }
  for (const auto& u : unary_) {
    if (u.feature >= n) throw Error(ErrorCode::kInvalidCausalModel, "unary feature index out of range");
    const auto& name = schema.feature(u.feature).name;
    if (monotone_[u.feature] != data::Monotone::kNone && u.monotone != data::Monotone::kNone &&
        monotone_[u.feature] != u.monotone) {
      throw Error(ErrorCode::kInvalidCausalModel,
                  "unary constraint on '" + name + "' contradicts the schema's monotone", name);
    }
    if (u.monotone != data::Monotone::kNone) monotone_[u.feature] = u.monotone;
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.parent >= n || edge.child >= n) {
      throw Error(ErrorCode::kInvalidCausalModel, "edge feature index out of range");
    }
    const auto& child = schema.feature(edge.child).name;
    if (edge.parent == edge.child) {
      throw Error(ErrorCode::kInvalidCausalModel, "edge from '" + child + "' to itself", child);
    }
    if (immutable_[edge.child]) {
      throw Error(ErrorCode::kInvalidCausalModel, "edge targets immutable feature '" + child + "'", child);
    }
    if (edge.effects.empty()) {
      throw Error(ErrorCode::kInvalidCausalModel, "edge into '" + child + "' has no effects", child);
    }
    double total = 0.0;
    for (const auto& eff : edge.effects) {
      if (!(eff.probability >= 0.0 && eff.probability <= 1.0) || !std::isfinite(eff.delta)) {
        throw Error(ErrorCode::kInvalidCausalModel, "invalid effect on '" + child + "'", child);
      }
      total += eff.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidCausalModel,
                  "effect probabilities into '" + child + "' do not sum to 1", child);
    }
    outgoing_[edge.parent].push_back(e);
    incoming_[edge.child].push_back(e);
  }

  // Kahn's algorithm; ties resolved by feature index.
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& edge : edges_) ++indegree[edge.child];
  std::vector<std::size_t> ready;
  for (std::size_t j = n; j-- > 0;) {
    if (indegree[j] == 0) ready.push_back(j);
  }
  while (!ready.empty()) {
    const std::size_t j = ready.back();
    ready.pop_back();
    topo_order_.push_back(j);
    std::vector<std::size_t> released;
    for (auto e : outgoing_[j]) {
      if (--indegree[edges_[e].child] == 0) released.push_back(edges_[e].child);
    }
    std::sort(released.rbegin(), released.rend());
    for (auto c : released) ready.push_back(c);
    std::sort(ready.rbegin(), ready.rend());
  }
  if (topo_order_.size() != n) {
    throw Error(ErrorCode::kInvalidCausalModel, "causal edge graph has a cycle");
  }
}

bool CausalModel::has_ancestor_in(std::size_t feature, const std::vector<bool>& changed) const {
  std::vector<bool> seen(num_features(), false);
  std::vector<std::size_t> stack{feature};
  while (!stack.empty()) {
    const std::size_t j = stack.back();
    stack.pop_back();
    for (auto e : incoming_[j]) {
      const std::size_t p = edges_[e].parent;
      if (seen[p]) continue;
      if (changed[p]) return true;
      seen[p] = true;
      stack.push_back(p);
    }
  }
  return false;
}

CausalModel CausalModel::from_json(const json* section, const data::FeatureSchema& schema) {
  if (section == nullptr || section->is_null()) return CausalModel(schema);
  try {
    if (!section->is_object()) {
      throw Error(ErrorCode::kInvalidCausalModel, "causal section must be an object");
    }
    std::vector<UnaryConstraint> unary;
    for (const auto& u : section->value("unary", json::array())) {
      unary.push_back({resolve(schema, u, "feature"), data::parse_monotone(u.at("monotone").get<std::string>())});
    }
    std::vector<CausalEdge> edges;
    for (const auto& e : section->value("edges", json::array())) {
      CausalEdge edge;
      edge.parent = resolve(schema, e, "parent");
      edge.child = resolve(schema, e, "child");
      if (e.contains("trigger")) edge.trigger = parse_trigger(e.at("trigger").get<std::string>());
      for (const auto& eff : e.at("effects")) {
        edge.effects.push_back({eff.at("p").get<double>(), eff.at("delta").get<double>()});
      }
      edges.push_back(std::move(edge));
    }
    std::vector<std::size_t> immutable;
    for (const auto& name : section->value("immutable", json::array())) {
      const auto idx = schema.index_of(name.get<std::string>());
      if (!idx) {
        throw Error(ErrorCode::kInvalidCausalModel, "unknown feature '" + name.get<std::string>() + "'",
                    name.get<std::string>());
      }
      immutable.push_back(*idx);
    }
    return CausalModel(schema, std::move(unary), std::move(edges), std::move(immutable));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidCausalModel, std::string("causal section: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidSchema) {
      throw Error(ErrorCode::kInvalidCausalModel, e.what(), e.field());
    }
    throw;
  }
}

json CausalModel::to_json(const data::FeatureSchema& schema) const {
  json unary = json::array();
  for (const auto& u : unary_) {
    unary.push_back({{"feature", schema.feature(u.feature).name}, {"monotone", data::to_string(u.monotone)}});
  }
  json edges = json::array();
  for (const auto& e : edges_) {
    json effects = json::array();
    for (const auto& eff : e.effects) effects.push_back({{"p", eff.probability}, {"delta", eff.delta}});
    edges.push_back({{"parent", schema.feature(e.parent).name},
                     {"child", schema.feature(e.child).name},
                     {"trigger", to_string(e.trigger)},
                     {"effects", effects}});
  }
  json immutable = json::array();
  for (auto j : immutable_list_) immutable.push_back(schema.feature(j).name);
  return {{"unary", unary}, {"edges", edges}, {"immutable", immutable}};
}

std::optional<Violation> check_action(const CausalModel& cm, const data::FeatureSchema& schema,
                                      std::span<const double> state, const Action& action) {
  if (action.feature >= schema.size() || state.size() != schema.size()) {
    return Violation{ViolationKind::kInvalidStep, action.feature, "feature:" + std::to_string(action.feature),
                     "action targets no feature of the schema"};
  }
  const auto& f = schema.feature(action.feature);
  if (cm.is_immutable(action.feature)) {
    return Violation{ViolationKind::kImmutable, action.feature, constraint_tag("immutable", f),
                     "'" + f.name + "' is immutable"};
  }
  if (!cm.is_actionable(action.feature)) {
    return Violation{ViolationKind::kNotActionable, action.feature, constraint_tag("not_actionable", f),
                     "'" + f.name + "' can only change through causal effects"};
  }
  if (!std::isfinite(action.delta) ||
      (f.is_categorical() && action.delta != 0.0 && std::abs(action.delta) != 1.0)) {
    return Violation{ViolationKind::kInvalidStep, action.feature, constraint_tag("step", f),
                     "categorical '" + f.name + "' moves by one category per action"};
  }
  const auto mono = cm.monotone(action.feature);
  if (mono == data::Monotone::kNonDecreasing && action.delta < 0.0) {
    return Violation{ViolationKind::kMonotone, action.feature, constraint_tag("non_decreasing", f),
                     "'" + f.name + "' cannot decrease"};
  }
  if (mono == data::Monotone::kNonIncreasing && action.delta > 0.0) {
    return Violation{ViolationKind::kMonotone, action.feature, constraint_tag("non_increasing", f),
                     "'" + f.name + "' cannot increase"};
  }
  const auto b = schema.state_bounds(action.feature);
  const double target = state[action.feature] + action.delta;
  if (target < b.lo - kTolerance || target > b.hi + kTolerance) {
    return Violation{ViolationKind::kOutOfDomain, action.feature, constraint_tag("domain", f),
                     "action moves '" + f.name + "' outside its domain"};
  }
  return std::nullopt;
}

bool is_action_allowed(const CausalModel& cm, const data::FeatureSchema& schema,
                       std::span<const double> state, const Action& action) {
  return !check_action(cm, schema, state, action).has_value();
}

std::vector<FeatureDelta> endogenous_updates(const CausalModel& cm, std::size_t changed_feature,
                                             int direction, Rng& rng) {
  std::vector<FeatureDelta> out;
  for (auto e : cm.outgoing(changed_feature)) {
    const auto& edge = cm.edges()[e];
    if (!trigger_matches(edge.trigger, direction)) continue;
    if (edge.effects.size() == 1) {
      out.push_back({edge.child, edge.effects.front().delta});
      continue;
    }
    const double u = uniform01(rng);
    double cumulative = 0.0;
    std::size_t pick = edge.effects.size() - 1;
    for (std::size_t k = 0; k < edge.effects.size(); ++k) {
      cumulative += edge.effects[k].probability;
      if (u < cumulative) {
        pick = k;
        break;
      }
    }
    out.push_back({edge.child, edge.effects[pick].delta});
  }
  return out;
}

State apply_action(const CausalModel& cm, const data::FeatureSchema& schema,
                   std::span<const double> state, const Action& action, Rng& rng) {
  State next(state.begin(), state.end());
  next[action.feature] = clamp_to_state(schema, action.feature, state[action.feature] + action.delta);
  for (auto j : cm.topological_order()) {
    if (cm.outgoing(j).empty()) continue;
    const int direction = sign_of(next[j] - state[j]);
    if (direction == 0) continue;
    for (const auto& upd : endogenous_updates(cm, j, direction, rng)) {
      const double d = upd.delta * delta_factor(schema.feature(upd.feature));
      next[upd.feature] = clamp_to_state(schema, upd.feature, next[upd.feature] + d);
    }
  }
  return next;
}

std::vector<WeightedState> action_outcomes(const CausalModel& cm, const data::FeatureSchema& schema,
                                           std::span<const double> state, const Action& action) {
  State first(state.begin(), state.end());
  first[action.feature] = clamp_to_state(schema, action.feature, state[action.feature] + action.delta);

  std::vector<WeightedState> out;
  const auto& order = cm.topological_order();

  // Branches over every effect of every triggered edge, in the same order
  // apply_action visits them.
  std::function<void(std::size_t, std::vector<std::size_t>, std::size_t, State, double)> expand;
  expand = [&](std::size_t pos, std::vector<std::size_t> pending, std::size_t k, State next, double prob) {
    if (prob <= 0.0) return;
    while (k == pending.size()) {
      pending.clear();
      k = 0;
      for (; pos < order.size(); ++pos) {
        const auto j = order[pos];
        const int direction = sign_of(next[j] - state[j]);
        if (direction == 0) continue;
        for (auto e : cm.outgoing(j)) {
          if (trigger_matches(cm.edges()[e].trigger, direction)) pending.push_back(e);
        }
        if (!pending.empty()) break;
      }
      if (pos == order.size()) {
        for (auto& w : out) {
          if (w.state == next) {
            w.probability += prob;
            return;
          }
        }
        out.push_back({prob, std::move(next)});
        return;
      }
      ++pos;
    }
    const auto& edge = cm.edges()[pending[k]];
    for (const auto& eff : edge.effects) {
      State branch = next;
      const double d = eff.delta * delta_factor(schema.feature(edge.child));
      branch[edge.child] = clamp_to_state(schema, edge.child, branch[edge.child] + d);
      expand(pos, pending, k + 1, std::move(branch), prob * eff.probability);
    }
  };
  expand(0, {}, 0, std::move(first), 1.0);
  return out;
}

bool step_respects_causality(const CausalModel& cm, const data::FeatureSchema& schema,
                             std::span<const double> before, const Action& action,
                             std::span<const double> after) {
  if (before.size() != schema.size() || after.size() != schema.size()) return false;
  if (same_state(before, after)) return true;
  if (!is_action_allowed(cm, schema, before, action)) return false;
  for (const auto& w : action_outcomes(cm, schema, before, action)) {
    if (same_state(w.state, after)) return true;
  }
  return false;
}

bool endpoint_respects_causality(const CausalModel& cm, const data::FeatureSchema& schema,
                                 std::span<const double> start, std::span<const double> end) {
  const std::size_t n = schema.size();
  if (start.size() != n || end.size() != n) return false;
  std::vector<bool> changed(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const auto b = schema.state_bounds(j);
    if (!(end[j] >= b.lo - kTolerance && end[j] <= b.hi + kTolerance)) return false;
    const double diff = end[j] - start[j];
    if (std::abs(diff) <= kTolerance) continue;
    changed[j] = true;
    if (cm.is_immutable(j)) return false;
    const auto mono = cm.monotone(j);
    if (mono == data::Monotone::kNonDecreasing && diff < 0.0) return false;
    if (mono == data::Monotone::kNonIncreasing && diff > 0.0) return false;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (changed[j] && !cm.is_actionable(j) && !cm.has_ancestor_in(j, changed)) return false;
  }
  return true;
}

bool path_respects_causality(const CausalModel& cm, const data::FeatureSchema& schema,
                             const explain::CfePath& path) {
  if (path.steps.empty()) return endpoint_respects_causality(cm, schema, path.start, path.final_state);
  std::span<const double> cursor = path.start;
  for (const auto& step : path.steps) {
    if (!same_state(cursor, step.before)) return false;
    if (!step_respects_causality(cm, schema, step.before, step.action, step.after)) return false;
    cursor = step.after;
  }
  return same_state(cursor, path.final_state);
}

}  // namespace recourse::causal

#include "recourse/mdp/codec.hpp"

#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::mdp {

StateCodec::StateCodec(const data::FeatureSchema& schema) : schema_(schema), scaler_(schema) {}

json StateCodec::state_to_json(std::span<const double> state) const {
  json out = json::object();
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    const auto& f = schema_.feature(j);
    if (f.is_categorical()) {
      const auto code = static_cast<std::size_t>(std::llround(state[j]));
      out[f.name] = code < f.categories.size() ? f.categories[code] : std::to_string(code);
    } else {
      out[f.name] = scaler_.unscale(j, state[j]);
    }
  }
  return out;
}

State StateCodec::state_from_json(const json& node) const {
  if (!node.is_object()) throw Error(ErrorCode::kPreconditionViolated, "state must be a JSON object", "state");
  for (const auto& [name, value] : node.items()) {
    if (!schema_.index_of(name)) throw Error(ErrorCode::kUnknownColumn, "unknown feature '" + name + "'", name);
  }
  State s(schema_.size());
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    const auto& f = schema_.feature(j);
    if (!node.contains(f.name) || node.at(f.name).is_null()) {
      throw Error(ErrorCode::kMissingValue, "missing value for '" + f.name + "'", f.name);
    }
    const json& v = node.at(f.name);
    if (f.is_categorical()) {
      const auto code = v.is_string() ? f.category_code(v.get<std::string>()) : std::nullopt;
      if (!code) throw Error(ErrorCode::kOutOfDomainValue, "'" + f.name + "' is not one of its categories", f.name);
      s[j] = *code;
    } else {
      if (!v.is_number()) throw Error(ErrorCode::kOutOfDomainValue, "'" + f.name + "' must be a number", f.name);
      const double x = v.get<double>();
      if (!std::isfinite(x) || x < f.lo || x > f.hi) {
        throw Error(ErrorCode::kOutOfDomainValue, "'" + f.name + "' is outside its domain", f.name);
      }
      s[j] = scaler_.scale(j, x);
    }
  }
  return s;
}

json StateCodec::action_to_json(const Action& action) const {
  const auto& f = schema_.feature(action.feature);
  return {{"feature", f.name}, {"delta", scaler_.unscale_delta(action.feature, action.delta)}};
}

Action StateCodec::action_from_json(const json& node) const {
  if (!node.is_object() || !node.contains("feature") || !node.at("feature").is_string()) {
    throw Error(ErrorCode::kPreconditionViolated, "action needs a feature name", "action.feature");
  }
  const auto name = node.at("feature").get<std::string>();
  const auto idx = schema_.index_of(name);
  if (!idx) throw Error(ErrorCode::kUnknownColumn, "unknown feature '" + name + "'", name);
  if (!node.contains("delta") || !node.at("delta").is_number()) {
    throw Error(ErrorCode::kPreconditionViolated, "action needs a numeric delta", "action.delta");
  }
  const double delta = node.at("delta").get<double>();
  if (!std::isfinite(delta)) throw Error(ErrorCode::kPreconditionViolated, "delta must be finite", "action.delta");
  return Action{*idx, scaler_.scale_delta(*idx, delta)};
}

}  // namespace recourse::mdp

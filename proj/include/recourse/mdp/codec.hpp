#pragma once

#include <span>

#include "recourse/common/serialization.hpp"
#include "recourse/data/scaling.hpp"
#include "recourse/data/schema.hpp"
#include "recourse/mdp/types.hpp"

namespace recourse::mdp {

// Converts states and actions between the internal state vector and JSON in
// original units: numbers for numerical features, category names for
// categorical ones. Action deltas are original units (numerical) or +-1
// category steps (categorical).
class StateCodec {
 public:
  explicit StateCodec(const data::FeatureSchema& schema);

  json state_to_json(std::span<const double> state) const;
  // Throws UnknownColumn, MissingValue or OutOfDomainValue naming the field.
  State state_from_json(const json& node) const;

  json action_to_json(const Action& action) const;
  // Throws UnknownColumn / PreconditionViolated naming the field.
  Action action_from_json(const json& node) const;

  const data::FeatureSchema& schema() const { return schema_; }
  const data::ScalingTransform& scaler() const { return scaler_; }

 private:
  data::FeatureSchema schema_;
  data::ScalingTransform scaler_;
};

}  // namespace recourse::mdp

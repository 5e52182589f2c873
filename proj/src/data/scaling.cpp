#include "recourse/data/scaling.hpp"

#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::data {

ScalingTransform::ScalingTransform(const FeatureSchema& schema) {
  for (const auto& f : schema.features()) {
    numerical_.push_back(f.is_numerical());
    lo_.push_back(f.lo);
    hi_.push_back(f.hi);
    if (f.is_numerical()) {
      if (!std::isfinite(f.lo) || !std::isfinite(f.hi)) {
        throw Error(ErrorCode::kPreconditionViolated, "non-finite domain for '" + f.name + "'",
                    f.name);
      }
      if (!(f.lo < f.hi)) {
        throw Error(ErrorCode::kDegenerateDomain, "lo = hi for '" + f.name + "'", f.name);
      }
    }
  }
}

double ScalingTransform::scale(std::size_t feature, double value) const {
  if (!numerical_.at(feature)) return value;
  return 2.0 * (value - lo_[feature]) / (hi_[feature] - lo_[feature]) - 1.0;
}

double ScalingTransform::unscale(std::size_t feature, double value) const {
  if (!numerical_.at(feature)) return value;
  return lo_[feature] + (value + 1.0) * (hi_[feature] - lo_[feature]) / 2.0;
}

std::vector<double> ScalingTransform::scale(std::span<const double> row) const {
  if (row.size() != numerical_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "row width does not match the scaler");
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = scale(j, row[j]);
  return out;
}

std::vector<double> ScalingTransform::unscale(std::span<const double> state) const {
  if (state.size() != numerical_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "state width does not match the scaler");
  }
  std::vector<double> out(state.size());
  for (std::size_t j = 0; j < state.size(); ++j) out[j] = unscale(j, state[j]);
  return out;
}

double ScalingTransform::scale_delta(std::size_t feature, double delta) const {
  if (!numerical_.at(feature)) return delta;
  return delta * 2.0 / (hi_[feature] - lo_[feature]);
}

double ScalingTransform::unscale_delta(std::size_t feature, double delta) const {
  if (!numerical_.at(feature)) return delta;
  return delta * (hi_[feature] - lo_[feature]) / 2.0;
}

double ScalingTransform::slope(std::size_t feature) const {
  return numerical_.at(feature) ? 2.0 / (hi_[feature] - lo_[feature]) : 1.0;
}

double ScalingTransform::intercept(std::size_t feature) const {
  return numerical_.at(feature) ? -1.0 - 2.0 * lo_[feature] / (hi_[feature] - lo_[feature]) : 0.0;
}

ScalingTransform fit_scaler(const Dataset& ds) { return ScalingTransform(ds.schema); }

}  // namespace recourse::data

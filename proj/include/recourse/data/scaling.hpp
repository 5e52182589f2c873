#pragma once

#include <span>
#include <vector>

#include "recourse/data/dataset.hpp"

namespace recourse::data {

// Per numerical feature, the affine map x -> 2 (x - lo) / (hi - lo) - 1,
// sending lo to -1 and hi to +1 exactly. Categorical codes pass through.
class ScalingTransform {
 public:
  ScalingTransform() = default;
  explicit ScalingTransform(const FeatureSchema& schema);

  std::size_t size() const { return numerical_.size(); }

  double scale(std::size_t feature, double value) const;
  double unscale(std::size_t feature, double value) const;
  std::vector<double> scale(std::span<const double> row) const;
  std::vector<double> unscale(std::span<const double> state) const;

  // Converts a change expressed in original units into state units.
  double scale_delta(std::size_t feature, double delta) const;
  double unscale_delta(std::size_t feature, double delta) const;

  // Coefficients (a, b) of scaled = a * x + b (numerical features only).
  double slope(std::size_t feature) const;
  double intercept(std::size_t feature) const;

 private:
  std::vector<bool> numerical_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

ScalingTransform fit_scaler(const Dataset& ds);

}  // namespace recourse::data

#pragma once

#include <span>
#include <vector>

#include "recourse/data/dataset.hpp"

namespace recourse::data {

double median(std::vector<double> values);
double median_absolute_deviation(std::span<const double> values);

// Training-split statistics in original units.
struct TrainStats {
  // MAD per feature (0 for categorical features).
  std::vector<double> mad;
  // True where a numerical feature has MAD == 0 on the train split.
  std::vector<bool> zero_mad;
  // Half the domain width, substituted when MAD == 0.
  std::vector<double> mad_fallback;
  // Sorted train-split values per feature: empirical CDF knots.
  std::vector<std::vector<double>> cdf_knots;

  // Denominator used by numerical proximity.
  double proximity_scale(std::size_t feature) const {
    return zero_mad[feature] ? mad_fallback[feature] : mad[feature];
  }
  // Fraction of train values <= x.
  double empirical_cdf(std::size_t feature, double x) const;
};

TrainStats compute_train_stats(const Dataset& ds);

}  // namespace recourse::data

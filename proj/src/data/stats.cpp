#include "recourse/data/stats.hpp"

#include <algorithm>
#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::data {

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median_absolute_deviation(std::span<const double> values) {
  const double center = median(std::vector<double>(values.begin(), values.end()));
  std::vector<double> deviations;
  deviations.reserve(values.size());
  for (double v : values) deviations.push_back(std::abs(v - center));
  return median(std::move(deviations));
}

double TrainStats::empirical_cdf(std::size_t feature, double x) const {
  const auto& knots = cdf_knots.at(feature);
  if (knots.empty()) return 0.0;
  const auto count = std::upper_bound(knots.begin(), knots.end(), x) - knots.begin();
  return static_cast<double>(count) / static_cast<double>(knots.size());
}

TrainStats compute_train_stats(const Dataset& ds) {
  if (ds.split.train.empty()) throw Error(ErrorCode::kEmptySplit, "train split is empty");
  const auto& schema = ds.schema;
  TrainStats stats;
  stats.mad.assign(schema.size(), 0.0);
  stats.zero_mad.assign(schema.size(), false);
  stats.mad_fallback.assign(schema.size(), 0.0);
  stats.cdf_knots.resize(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    std::vector<double> column;
    column.reserve(ds.split.train.size());
    for (std::size_t r : ds.split.train) column.push_back(ds.rows[r][j]);
    std::sort(column.begin(), column.end());
    const auto& f = schema.feature(j);
    if (f.is_numerical()) {
      stats.mad[j] = median_absolute_deviation(column);
      stats.zero_mad[j] = stats.mad[j] == 0.0;
      stats.mad_fallback[j] = 0.5 * (f.hi - f.lo);
    }
    stats.cdf_knots[j] = std::move(column);
  }
  return stats;
}

}  // namespace recourse::data

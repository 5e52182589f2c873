#pragma once

#include <cstdint>
#include <string>

#include "recourse/data/dataset.hpp"

namespace recourse::data {

// Two numerical features on [0, 100]: "income" (actionable, non-decreasing)
// and "savings" (actionable). Rows lie in a diagonal band
// savings ~ income + N(0, band_sd), so the data manifold is narrower than the
// domain. Label is 1 exactly when income + savings > 100.
struct SyntheticOptions {
  std::size_t rows = 2000;
  double band_sd = 12.0;
  std::uint64_t seed = 1;
};

// Schema document text (features + causal section) for the synthetic set.
std::string synthetic_schema_text();
Dataset make_synthetic_dataset(const SyntheticOptions& options, const SplitOptions& split = {});

inline bool synthetic_true_label(double income, double savings) { return income + savings > 100.0; }

}  // namespace recourse::data

#include "recourse/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "recourse/common/random.hpp"

namespace recourse::data {

std::string synthetic_schema_text() {
  return R"({
  "schema_version": 1,
  "label_column": "approved",
  "desired_label": 1,
  "features": [
    {"name": "income", "kind": "numerical", "domain": [0, 100],
     "mutability": "actionable", "monotone": "non_decreasing"},
    {"name": "savings", "kind": "numerical", "domain": [0, 100],
     "mutability": "actionable", "monotone": "none"}
  ],
  "causal": {
    "unary": [{"feature": "income", "monotone": "non_decreasing"}],
    "edges": [],
    "immutable": []
  }
}
)";
}

Dataset make_synthetic_dataset(const SyntheticOptions& options, const SplitOptions& split) {
  const auto document = parse_schema_document(synthetic_schema_text());
  Rng rng(derive_seed(options.seed, 0xda7a));
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(options.rows);
  labels.reserve(options.rows);
  while (rows.size() < options.rows) {
    const double income = 100.0 * uniform01(rng);
    const double savings =
        std::clamp(income + options.band_sd * standard_normal(rng), 0.0, 100.0);
    // Keep a small margin around the boundary so the labels are cleanly
    // separable by a smooth classifier.
    if (std::abs(income + savings - 100.0) < 1.0) continue;
    rows.push_back({income, savings});
    labels.push_back(synthetic_true_label(income, savings) ? 1 : 0);
  }
  return make_dataset(document.schema, std::move(rows), std::move(labels), split);
}

}  // namespace recourse::data

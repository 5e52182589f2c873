#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "recourse/data/schema.hpp"

namespace recourse::data {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct SplitOptions {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
};

// Rows are in original units; categorical columns hold integer codes.
struct Dataset {
  FeatureSchema schema;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  Split split;

  std::size_t size() const { return rows.size(); }
};

// Seeded permutation, then floor(n * train) / floor(n * val) / remainder.
Split make_split(std::size_t n, const SplitOptions& options);

// Parses a comma-separated CSV with a header row. Columns are matched by
// name; every schema feature and the label column must be present.
Dataset load_dataset(std::istream& csv, const FeatureSchema& schema,
                     const SplitOptions& options = {});
Dataset load_dataset_file(const std::string& path, const FeatureSchema& schema,
                          const SplitOptions& options = {});

// Validates domains and assigns a split; used by in-memory generators.
Dataset make_dataset(FeatureSchema schema, std::vector<std::vector<double>> rows,
                     std::vector<int> labels, const SplitOptions& options = {});

void write_csv(std::ostream& out, const Dataset& ds);

// Renders a row value in original units: the number for numerical features,
// the category name for categorical ones.
std::string format_value(const FeatureSpec& spec, double value);

}  // namespace recourse::data

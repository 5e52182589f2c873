#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recourse/common/serialization.hpp"

namespace recourse::data {

enum class FeatureKind { kNumerical, kCategorical };
enum class Mutability { kActionable, kMutableNotActionable, kImmutable };
enum class Monotone { kNone, kNonDecreasing, kNonIncreasing };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Mutability mutability);
std::string_view to_string(Monotone monotone);
Monotone parse_monotone(std::string_view text);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  // Numerical domain in original units.
  double lo = 0.0;
  double hi = 1.0;
  // Categorical domain; category i is encoded as integer code i.
  std::vector<std::string> categories;
  Mutability mutability = Mutability::kActionable;
  Monotone monotone = Monotone::kNone;

  bool is_numerical() const { return kind == FeatureKind::kNumerical; }
  bool is_categorical() const { return kind == FeatureKind::kCategorical; }

  std::optional<int> category_code(std::string_view value) const;
};

// Bounds of a feature inside the MDP state vector: [-1, 1] for numerical
// features (scaled), [0, k-1] for categorical codes.
struct StateBounds {
  double lo;
  double hi;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FeatureSpec> features, std::string label_column,
                int desired_label, std::vector<std::string> label_values = {});

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t index) const { return features_.at(index); }
  std::size_t size() const { return features_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t require_index(std::string_view name) const;

  const std::string& label_column() const { return label_column_; }
  int desired_label() const { return desired_label_; }
  // Optional string names for label classes (index = class id).
  const std::vector<std::string>& label_values() const { return label_values_; }
  std::size_t num_classes() const { return label_values_.empty() ? 2 : label_values_.size(); }

  std::size_t num_numerical() const;
  std::size_t num_categorical() const;
  StateBounds state_bounds(std::size_t index) const;

 private:
  std::vector<FeatureSpec> features_;
  std::string label_column_;
  int desired_label_ = 1;
  std::vector<std::string> label_values_;
};

inline constexpr int kSchemaVersion = 1;

// The authored schema file: feature schema plus an optional "causal"
// section (parsed by the causal module). `text` is kept verbatim.
struct SchemaDocument {
  std::string text;
  json document;
  FeatureSchema schema;
  std::string fingerprint;

  const json* causal_section() const;
};

FeatureSchema parse_feature_schema(const json& document);
SchemaDocument parse_schema_document(std::string text);
SchemaDocument load_schema_document(const std::string& path);

// Inverse of parse_feature_schema (no causal section).
json feature_schema_to_json(const FeatureSchema& schema);

}  // namespace recourse::data

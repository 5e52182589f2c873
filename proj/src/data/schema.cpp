#include "recourse/data/schema.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "recourse/common/error.hpp"

namespace recourse::data {

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::kNumerical ? "numerical" : "categorical";
}

std::string_view to_string(Mutability mutability) {
  switch (mutability) {
    case Mutability::kActionable: return "actionable";
    case Mutability::kMutableNotActionable: return "mutable_not_actionable";
    case Mutability::kImmutable: return "immutable";
  }
  return "actionable";
}

std::string_view to_string(Monotone monotone) {
  switch (monotone) {
    case Monotone::kNone: return "none";
    case Monotone::kNonDecreasing: return "non_decreasing";
    case Monotone::kNonIncreasing: return "non_increasing";
  }
  return "none";
}

Monotone parse_monotone(std::string_view text) {
  if (text == "none") return Monotone::kNone;
  if (text == "non_decreasing") return Monotone::kNonDecreasing;
  if (text == "non_increasing") return Monotone::kNonIncreasing;
  throw Error(ErrorCode::kInvalidSchema, "unknown monotone value '" + std::string(text) + "'");
}

namespace {

Mutability parse_mutability(std::string_view text) {
  if (text == "actionable") return Mutability::kActionable;
  if (text == "mutable_not_actionable") return Mutability::kMutableNotActionable;
  if (text == "immutable") return Mutability::kImmutable;
  throw Error(ErrorCode::kInvalidSchema, "unknown mutability '" + std::string(text) + "'");
}

FeatureKind parse_kind(std::string_view text) {
  if (text == "numerical") return FeatureKind::kNumerical;
  if (text == "categorical") return FeatureKind::kCategorical;
  throw Error(ErrorCode::kInvalidSchema, "unknown feature kind '" + std::string(text) + "'");
}

std::string category_label(const json& item) {
  if (item.is_string()) return item.get<std::string>();
  if (item.is_number_integer()) return std::to_string(item.get<long long>());
  throw Error(ErrorCode::kInvalidSchema, "categories must be strings or integers");
}

}  // namespace

std::optional<int> FeatureSpec::category_code(std::string_view value) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == value) return static_cast<int>(i);
  }
  return std::nullopt;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, std::string label_column,
                             int desired_label, std::vector<std::string> label_values)
    : features_(std::move(features)),
      label_column_(std::move(label_column)),
      desired_label_(desired_label),
      label_values_(std::move(label_values)) {
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw Error(ErrorCode::kInvalidSchema, "feature with empty name");
    if (!names.insert(f.name).second) {
      throw Error(ErrorCode::kInvalidSchema, "duplicate feature '" + f.name + "'", f.name);
    }
    if (f.is_numerical() && !(f.lo < f.hi)) {
      throw Error(ErrorCode::kDegenerateDomain, "feature '" + f.name + "' needs lo < hi", f.name);
    }
    if (f.is_numerical() && (!std::isfinite(f.lo) || !std::isfinite(f.hi))) {
      throw Error(ErrorCode::kInvalidSchema, "feature '" + f.name + "' has a non-finite domain",
                  f.name);
    }
    if (f.is_categorical() && f.categories.size() < 2) {
      throw Error(ErrorCode::kInvalidSchema,
                  "categorical feature '" + f.name + "' needs at least 2 categories", f.name);
    }
  }
  if (label_column_.empty()) throw Error(ErrorCode::kInvalidSchema, "missing label column");
  if (names.count(label_column_) != 0) {
    throw Error(ErrorCode::kInvalidSchema, "label column must not be a feature", label_column_);
  }
  if (desired_label_ < 0 || static_cast<std::size_t>(desired_label_) >= num_classes()) {
    throw Error(ErrorCode::kInvalidSchema, "desired_label outside the label classes");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::require_index(std::string_view name) const {
  auto index = index_of(name);
  if (!index) {
    throw Error(ErrorCode::kInvalidSchema, "unknown feature '" + std::string(name) + "'",
                std::string(name));
  }
  return *index;
}

std::size_t FeatureSchema::num_numerical() const {
  return static_cast<std::size_t>(std::count_if(
      features_.begin(), features_.end(), [](const FeatureSpec& f) { return f.is_numerical(); }));
}

std::size_t FeatureSchema::num_categorical() const { return size() - num_numerical(); }

StateBounds FeatureSchema::state_bounds(std::size_t index) const {
  const auto& f = feature(index);
  if (f.is_numerical()) return {-1.0, 1.0};
  return {0.0, static_cast<double>(f.categories.size() - 1)};
}

const json* SchemaDocument::causal_section() const {
  auto it = document.find("causal");
  return it == document.end() ? nullptr : &*it;
}

namespace {

FeatureSchema parse_feature_schema_impl(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidSchema, "schema must be a JSON object");
  const int version = doc.value("schema_version", -1);
  if (version < 1) throw Error(ErrorCode::kInvalidSchema, "missing integer schema_version");
  if (version > kSchemaVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "schema_version " + std::to_string(version) + " is newer than supported");
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::kInvalidSchema, "schema needs a 'features' array");
  }
  std::vector<FeatureSpec> features;
  for (const auto& item : doc["features"]) {
    FeatureSpec f;
    f.name = item.at("name").get<std::string>();
    f.kind = parse_kind(item.at("kind").get<std::string>());
    const auto& domain = item.at("domain");
    if (!domain.is_array()) {
      throw Error(ErrorCode::kInvalidSchema, "domain of '" + f.name + "' must be an array", f.name);
    }
    if (f.is_numerical()) {
      if (domain.size() != 2) {
        throw Error(ErrorCode::kInvalidSchema, "numerical domain of '" + f.name + "' needs [lo, hi]",
                    f.name);
      }
      f.lo = domain[0].get<double>();
      f.hi = domain[1].get<double>();
    } else {
      for (const auto& c : domain) f.categories.push_back(category_label(c));
    }
    f.mutability = parse_mutability(item.value("mutability", "actionable"));
    f.monotone = parse_monotone(item.value("monotone", "none"));
    features.push_back(std::move(f));
  }
  std::vector<std::string> label_values;
  if (doc.contains("label_values")) {
    for (const auto& v : doc["label_values"]) label_values.push_back(category_label(v));
  }
  return FeatureSchema(std::move(features), doc.at("label_column").get<std::string>(),
                       doc.value("desired_label", 1), std::move(label_values));
}

}  // namespace

FeatureSchema parse_feature_schema(const json& document) {
  try {
    return parse_feature_schema_impl(document);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSchema, std::string("schema: ") + e.what());
  }
}

SchemaDocument parse_schema_document(std::string text) {
  SchemaDocument out;
  try {
    out.document = json::parse(text);
    out.schema = parse_feature_schema(out.document);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSchema, std::string("schema document: ") + e.what());
  }
  out.text = std::move(text);
  out.fingerprint = json_fingerprint(out.document);
  return out;
}

SchemaDocument load_schema_document(const std::string& path) {
  return parse_schema_document(read_text_file(path));
}

json feature_schema_to_json(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema.features()) {
    json item = {{"name", f.name},
                 {"kind", to_string(f.kind)},
                 {"mutability", to_string(f.mutability)},
                 {"monotone", to_string(f.monotone)}};
    if (f.is_numerical()) {
      item["domain"] = {f.lo, f.hi};
    } else {
      item["domain"] = f.categories;
    }
    features.push_back(std::move(item));
  }
  json out = {{"schema_version", kSchemaVersion},
              {"label_column", schema.label_column()},
              {"desired_label", schema.desired_label()},
              {"features", std::move(features)}};
  if (!schema.label_values().empty()) out["label_values"] = schema.label_values();
  return out;
}

}  // namespace recourse::data

#include "recourse/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "recourse/common/error.hpp"
#include "recourse/common/random.hpp"

namespace recourse::data {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string row_context(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

int parse_label(const FeatureSchema& schema, const std::string& text, std::size_t row) {
  const auto& values = schema.label_values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == text) return static_cast<int>(i);
  }
  auto number = parse_number(text);
  if (number && *number == std::floor(*number) && *number >= 0 &&
      *number < static_cast<double>(schema.num_classes())) {
    return static_cast<int>(*number);
  }
  throw Error(ErrorCode::kOutOfDomainValue,
              row_context(row, schema.label_column()) + ": unknown label '" + text + "'",
              schema.label_column());
}

void check_row(const FeatureSchema& schema, const std::vector<double>& row, std::size_t r) {
  if (row.size() != schema.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "row " + std::to_string(r) + " has wrong width");
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& f = schema.feature(j);
    const double v = row[j];
    const bool ok = f.is_numerical()
                        ? (v >= f.lo && v <= f.hi)
                        : (v == std::floor(v) && v >= 0 &&
                           v < static_cast<double>(f.categories.size()));
    if (!ok) {
      throw Error(ErrorCode::kOutOfDomainValue,
                  row_context(r, f.name) + ": value outside the declared domain", f.name);
    }
  }
}

}  // namespace

Split make_split(std::size_t n, const SplitOptions& options) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(options.seed, 0x5eed));
  // Fisher-Yates with our own uniform draw so the permutation does not
  // depend on the standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(n * options.train_fraction));
  const auto n_val = static_cast<std::size_t>(std::floor(n * options.val_fraction));
  Split split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

Dataset load_dataset(std::istream& csv, const FeatureSchema& schema, const SplitOptions& options) {
  std::string line;
  if (!std::getline(csv, line)) {
    throw Error(ErrorCode::kMissingValue, "CSV is empty (header row required)");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split_line(line);
  // column -> feature index, or -1 for the label column
  std::vector<long> column_target(header.size());
  std::vector<bool> seen(schema.size(), false);
  bool label_seen = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == schema.label_column()) {
      column_target[c] = -1;
      label_seen = true;
      continue;
    }
    auto index = schema.index_of(name);
    if (!index) throw Error(ErrorCode::kUnknownColumn, "unknown column '" + name + "'", name);
    column_target[c] = static_cast<long>(*index);
    seen[*index] = true;
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (!seen[j]) {
      const auto& name = schema.feature(j).name;
      throw Error(ErrorCode::kUnknownColumn, "schema feature '" + name + "' missing from CSV", name);
    }
  }
  if (!label_seen) {
    throw Error(ErrorCode::kUnknownColumn, "label column '" + schema.label_column() + "' missing",
                schema.label_column());
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t r = 0;
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    std::vector<double> row(schema.size(), 0.0);
    int label = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const long target = column_target[c];
      const std::string& column =
          target < 0 ? schema.label_column() : schema.feature(static_cast<std::size_t>(target)).name;
      if (c >= cells.size() || trim(cells[c]).empty()) {
        throw Error(ErrorCode::kMissingValue, row_context(r, column) + ": missing value", column);
      }
      const std::string cell = trim(cells[c]);
      if (target < 0) {
        label = parse_label(schema, cell, r);
        continue;
      }
      const auto& f = schema.feature(static_cast<std::size_t>(target));
      if (f.is_numerical()) {
        auto value = parse_number(cell);
        if (!value) {
          throw Error(ErrorCode::kOutOfDomainValue,
                      row_context(r, f.name) + ": '" + cell + "' is not a number", f.name);
        }
        row[static_cast<std::size_t>(target)] = *value;
      } else {
        auto code = f.category_code(cell);
        if (!code) {
          throw Error(ErrorCode::kOutOfDomainValue,
                      row_context(r, f.name) + ": unknown category '" + cell + "'", f.name);
        }
        row[static_cast<std::size_t>(target)] = *code;
      }
    }
    check_row(schema, row, r);
    rows.push_back(std::move(row));
    labels.push_back(label);
    ++r;
  }
  return make_dataset(schema, std::move(rows), std::move(labels), options);
}

Dataset load_dataset_file(const std::string& path, const FeatureSchema& schema,
                          const SplitOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open dataset '" + path + "'", path);
  return load_dataset(in, schema, options);
}

Dataset make_dataset(FeatureSchema schema, std::vector<std::vector<double>> rows,
                     std::vector<int> labels, const SplitOptions& options) {
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "rows and labels differ in length");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) check_row(schema, rows[r], r);
  Dataset ds;
  ds.schema = std::move(schema);
  ds.rows = std::move(rows);
  ds.labels = std::move(labels);
  ds.split = make_split(ds.rows.size(), options);
  return ds;
}

std::string format_value(const FeatureSpec& spec, double value) {
  if (spec.is_categorical()) {
    const auto code = static_cast<std::size_t>(std::llround(value));
    return code < spec.categories.size() ? spec.categories[code] : std::to_string(code);
  }
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

void write_csv(std::ostream& out, const Dataset& ds) {
  const auto& schema = ds.schema;
  for (const auto& f : schema.features()) out << f.name << ',';
  out << schema.label_column() << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      out << format_value(schema.feature(j), ds.rows[r][j]) << ',';
    }
    const int label = ds.labels[r];
    if (!schema.label_values().empty()) {
      out << schema.label_values()[static_cast<std::size_t>(label)];
    } else {
      out << label;
    }
    out << '\n';
  }
}

}  // namespace recourse::data

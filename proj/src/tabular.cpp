#include "faircf/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "faircf/errors.hpp"
#include "faircf/model.hpp"

namespace faircf {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

void require_binary(double v, const std::string& column, std::size_t row) {
  if (v != 0.0 && v != 1.0) {
    throw ValidationError("column '" + column + "' must be binary (0/1); row " +
                          std::to_string(row) + " has " + std::to_string(v));
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous: return "continuous";
    case FeatureKind::kOrdinal: return "ordinal";
    case FeatureKind::kNominal: return "nominal";
  }
  return "continuous";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "continuous") return FeatureKind::kContinuous;
  if (text == "ordinal") return FeatureKind::kOrdinal;
  if (text == "nominal" || text == "categorical") return FeatureKind::kNominal;
  throw SchemaError("unknown feature kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, std::string protected_feature,
                             std::string target_feature)
    : features_(std::move(features)),
      protected_(std::move(protected_feature)),
      target_(std::move(target_feature)) {
  validate_structure();
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& doc) {
  try {
    std::vector<FeatureSpec> features;
    const std::string target = doc.at("target").get<std::string>();
    for (const auto& f : doc.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      if (spec.name == target) continue;  // the label column is not a feature
      spec.kind = feature_kind_from_string(f.value("kind", "continuous"));
      spec.actionable = f.value("actionable", false);
      if (f.contains("min")) spec.min_override = spec.observed_min = f.at("min").get<double>();
      if (f.contains("max")) spec.max_override = spec.observed_max = f.at("max").get<double>();
      if (f.contains("categories")) {
        spec.categories = f.at("categories").get<std::vector<std::string>>();
      }
      features.push_back(std::move(spec));
    }
    return FeatureSchema(std::move(features), doc.at("protected").get<std::string>(), target);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema config: ") + e.what());
  }
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json entry = {{"name", f.name},
                            {"kind", std::string(to_string(f.kind))},
                            {"actionable", f.actionable},
                            {"min", f.observed_min},
                            {"max", f.observed_max}};
    if (!f.categories.empty()) entry["categories"] = f.categories;
    features.push_back(std::move(entry));
  }
  return {{"features", features}, {"protected", protected_}, {"target", target_}};
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  throw LookupError("unknown feature '" + std::string(name) + "'");
}

bool FeatureSchema::contains(std::string_view name) const {
  return std::any_of(features_.begin(), features_.end(),
                     [&](const FeatureSpec& f) { return f.name == name; });
}

std::vector<std::size_t> FeatureSchema::actionable_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].actionable) out.push_back(i);
  }
  return out;
}

double FeatureSchema::normalize(std::size_t feature, double value) const {
  const FeatureSpec& f = features_.at(feature);
  if (f.is_constant()) return 0.0;
  return (value - f.observed_min) / f.range();
}

double FeatureSchema::denormalize(std::size_t feature, double value) const {
  const FeatureSpec& f = features_.at(feature);
  return f.observed_min + value * f.range();
}

double FeatureSchema::normalize(std::string_view feature, double value) const {
  return normalize(index_of(feature), value);
}

double FeatureSchema::denormalize(std::string_view feature, double value) const {
  return denormalize(index_of(feature), value);
}

Instance FeatureSchema::normalize(std::span<const double> raw) const {
  if (raw.size() != features_.size()) {
    throw ShapeError("instance has " + std::to_string(raw.size()) + " values, schema has " +
                     std::to_string(features_.size()) + " features");
  }
  Instance out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalize(i, raw[i]);
  return out;
}

Instance FeatureSchema::denormalize(std::span<const double> normalized) const {
  if (normalized.size() != features_.size()) {
    throw ShapeError("instance has " + std::to_string(normalized.size()) +
                     " values, schema has " + std::to_string(features_.size()) + " features");
  }
  Instance out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) out[i] = denormalize(i, normalized[i]);
  return out;
}

void FeatureSchema::validate_structure() const {
  if (features_.empty()) throw SchemaError("schema declares no features");
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (!seen.insert(f.name).second) throw SchemaError("duplicate feature '" + f.name + "'");
  }
  if (target_.empty()) throw SchemaError("schema declares no target feature");
  if (seen.count(target_)) throw SchemaError("target '" + target_ + "' listed as a feature");
  if (!seen.count(protected_)) {
    throw SchemaError("protected feature '" + protected_ + "' is not a declared feature");
  }
  bool any_actionable = false;
  for (const auto& f : features_) {
    if (!f.actionable) continue;
    any_actionable = true;
    if (f.name == protected_) {
      throw SchemaError("protected feature '" + f.name + "' cannot be actionable");
    }
    if (f.kind == FeatureKind::kNominal) {
      throw SchemaError("nominal feature '" + f.name + "' cannot be actionable");
    }
  }
  if (!any_actionable) throw SchemaError("schema declares no actionable feature");
}

void FeatureSchema::validate_ranges() const {
  for (const auto& f : features_) {
    if (!(f.observed_min <= f.observed_max)) {
      throw SchemaError("feature '" + f.name + "' has min > max");
    }
    if (f.is_constant() && f.actionable) {
      throw SchemaError("feature '" + f.name + "' is constant and cannot be actionable");
    }
  }
}

std::string FeatureSchema::fingerprint() const {
  std::string canon;
  char buf[64];
  for (const auto& f : features_) {
    canon += f.name;
    canon += '|';
    canon += to_string(f.kind);
    canon += f.actionable ? "|a|" : "|-|";
    std::snprintf(buf, sizeof buf, "%.17g|%.17g;", f.observed_min, f.observed_max);
    canon += buf;
  }
  canon += "protected=" + protected_ + ";target=" + target_;
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(FeatureSchema schema, std::vector<Instance> rows, std::vector<int> labels)
    : schema_(std::move(schema)), rows_(std::move(rows)), labels_(std::move(labels)) {
  if (rows_.size() != labels_.size()) {
    throw ShapeError("row count " + std::to_string(rows_.size()) + " != label count " +
                     std::to_string(labels_.size()));
  }
  schema_.validate_structure();
  schema_.validate_ranges();
  validate_rows();
  normalized_.reserve(rows_.size());
  for (const auto& r : rows_) normalized_.push_back(schema_.normalize(r));
}

Dataset Dataset::fit(FeatureSchema schema, std::vector<Instance> rows, std::vector<int> labels) {
  for (std::size_t j = 0; j < schema.size(); ++j) {
    FeatureSpec& f = schema.mutable_feature(j);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != schema.size()) {
        throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                         " values, schema has " + std::to_string(schema.size()));
      }
      lo = std::min(lo, rows[i][j]);
      hi = std::max(hi, rows[i][j]);
    }
    if (rows.empty()) lo = hi = 0.0;
    f.observed_min = f.min_override.value_or(lo);
    f.observed_max = f.max_override.value_or(hi);
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

Dataset Dataset::with_fitted_schema(FeatureSchema schema, std::vector<Instance> rows,
                                    std::vector<int> labels) {
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

void Dataset::validate_rows() const {
  const std::size_t protected_index = schema_.protected_index();
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Instance& r = rows_[i];
    if (r.size() != schema_.size()) {
      throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(r.size()) +
                       " values, schema has " + std::to_string(schema_.size()));
    }
    for (std::size_t j = 0; j < r.size(); ++j) {
      const FeatureSpec& f = schema_.feature(j);
      if (!std::isfinite(r[j])) {
        throw ValidationError("row " + std::to_string(i) + " feature '" + f.name +
                              "' is not finite");
      }
      if (r[j] < f.observed_min || r[j] > f.observed_max) {
        throw ValidationError("row " + std::to_string(i) + " feature '" + f.name + "' value " +
                              std::to_string(r[j]) + " outside [" +
                              std::to_string(f.observed_min) + ", " +
                              std::to_string(f.observed_max) + "]");
      }
    }
    require_binary(r[protected_index], schema_.protected_feature(), i);
    require_binary(labels_[i], schema_.target_feature(), i);
  }
}

int Dataset::group(std::size_t i) const {
  return rows_.at(i)[schema_.protected_index()] == 1.0 ? 1 : 0;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Instance> rows;
  std::vector<int> labels;
  rows.reserve(indices.size());
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    rows.push_back(rows_.at(i));
    labels.push_back(labels_.at(i));
  }
  return Dataset(schema_, std::move(rows), std::move(labels));
}

// ---------------------------------------------------------------------------
// CSV

Dataset load_csv(std::istream& csv, FeatureSchema schema) {
  std::string line;
  if (!std::getline(csv, line)) throw SchemaError("CSV is empty (no header row)");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_record(line);

  std::map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of[header[c]] = c;
  auto column = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) throw SchemaError("CSV is missing column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> feature_columns;
  for (const auto& f : schema.features()) feature_columns.push_back(column(f.name));
  const std::size_t target_column = column(schema.target_feature());

  std::vector<std::vector<std::string>> records;
  long line_number = 1;
  while (std::getline(csv, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    auto cells = split_record(line);
    if (cells.size() != header.size()) {
      throw ParseError("CSV line " + std::to_string(line_number) + " has " +
                           std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header.size()),
                       line_number, -1);
    }
    records.push_back(std::move(cells));
  }

  // Nominal columns with non-numeric cells get string categories.
  for (std::size_t j = 0; j < schema.size(); ++j) {
    FeatureSpec& f = schema.mutable_feature(j);
    if (f.kind != FeatureKind::kNominal || !f.categories.empty()) continue;
    std::set<std::string> labels;
    bool numeric = true;
    for (const auto& rec : records) {
      const std::string& cell = rec[feature_columns[j]];
      if (!cell.empty() && !parse_number(cell)) numeric = false;
      labels.insert(cell);
    }
    if (!numeric) f.categories.assign(labels.begin(), labels.end());
  }

  std::vector<Instance> rows;
  std::vector<int> labels;
  rows.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const long data_row = static_cast<long>(r);
    Instance row(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const FeatureSpec& f = schema.feature(j);
      const std::string& cell = rec[feature_columns[j]];
      const long col = static_cast<long>(feature_columns[j]);
      if (cell.empty()) {
        throw ParseError("missing value in column '" + f.name + "' at data row " +
                             std::to_string(data_row),
                         data_row, col);
      }
      if (!f.categories.empty()) {
        auto it = std::find(f.categories.begin(), f.categories.end(), cell);
        if (it == f.categories.end()) {
          throw ParseError("unknown category '" + cell + "' in column '" + f.name +
                               "' at data row " + std::to_string(data_row),
                           data_row, col);
        }
        row[j] = static_cast<double>(it - f.categories.begin());
        continue;
      }
      auto value = parse_number(cell);
      if (!value) {
        throw ParseError("non-numeric value '" + cell + "' in column '" + f.name +
                             "' at data row " + std::to_string(data_row) + ", column " +
                             std::to_string(col),
                         data_row, col);
      }
      row[j] = *value;
    }
    const std::string& target_cell = rec[target_column];
    auto label = parse_number(target_cell);
    if (!label) {
      throw ParseError("non-numeric label '" + target_cell + "' at data row " +
                           std::to_string(data_row),
                       data_row, static_cast<long>(target_column));
    }
    require_binary(*label, schema.target_feature(), r);
    rows.push_back(std::move(row));
    labels.push_back(static_cast<int>(*label));
  }
  return Dataset::fit(std::move(schema), std::move(rows), std::move(labels));
}

Dataset load_csv(const std::filesystem::path& csv, const std::filesystem::path& schema_config) {
  FeatureSchema schema = FeatureSchema::load(schema_config);
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open CSV " + csv.string());
  return load_csv(in, std::move(schema));
}

TrainTestSplit train_test_split(std::size_t rows, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(rows);
  for (std::size_t i = 0; i < rows; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit modulo-free draws so the permutation does not
  // depend on the standard library's distribution implementation.
  for (std::size_t i = rows; i > 1; --i) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % i;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    std::swap(order[i - 1], order[draw % i]);
  }
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * rows));
  TrainTestSplit split;
  split.train.assign(order.begin(), order.begin() + cut);
  split.test.assign(order.begin() + cut, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ---------------------------------------------------------------------------
// Affected population

AffectedSet affected_subset(const Dataset& ds, const Classifier& h,
                            std::span<const std::size_t> candidate_rows) {
  AffectedSet out;
  for (std::size_t i : candidate_rows) {
    if (h.predict(ds.normalized_row(i)) != 0) continue;
    out.indices.push_back(i);
    (ds.group(i) == 0 ? out.group0 : out.group1).push_back(i);
  }
  if (out.indices.empty()) {
    throw EmptyPopulationError("affected population is empty: every row is predicted favorable");
  }
  return out;
}

AffectedSet affected_subset(const Dataset& ds, const Classifier& h) {
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return affected_subset(ds, h, all);
}

std::vector<Instance> Population::members(int group) const {
  std::vector<Instance> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (groups[i] == group) out.push_back(rows[i]);
  }
  return out;
}

std::size_t Population::count(int group) const {
  return static_cast<std::size_t>(std::count(groups.begin(), groups.end(), group));
}

Population make_population(const Dataset& ds, std::span<const std::size_t> indices) {
  Population pop;
  pop.rows.reserve(indices.size());
  for (std::size_t i : indices) {
    pop.rows.push_back(ds.normalized_row(i));
    pop.groups.push_back(ds.group(i));
    pop.source_rows.push_back(i);
  }
  return pop;
}

}  // namespace faircf

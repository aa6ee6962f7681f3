#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace faircf {

class Classifier;

// One value per schema feature, target excluded. Whether the values are raw
// or normalized depends on the call site; the engine works in normalized
// space and only denormalizes for reporting.
using Instance = std::vector<double>;

enum class FeatureKind { kContinuous, kOrdinal, kNominal };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  bool actionable = false;
  double observed_min = 0.0;
  double observed_max = 0.0;
  // Explicit bounds from the schema config; take precedence over fitting.
  std::optional<double> min_override;
  std::optional<double> max_override;
  // Nominal columns given as strings are coded by position in this list.
  std::vector<std::string> categories;

  double range() const { return observed_max - observed_min; }
  bool is_constant() const { return observed_max == observed_min; }
};

// Ordered feature list plus the protected and target designations. The target
// column is not part of `features()`; it lives in Dataset::labels().
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FeatureSpec> features, std::string protected_feature,
                std::string target_feature);

  // Schema config: {"features": [{name, kind, actionable, min?, max?}],
  //                 "protected": name, "target": name}
  static FeatureSchema from_json(const nlohmann::json& doc);
  static FeatureSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t size() const { return features_.size(); }
  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t i) const { return features_.at(i); }
  FeatureSpec& mutable_feature(std::size_t i) { return features_.at(i); }
  std::size_t index_of(std::string_view name) const;  // throws LookupError
  bool contains(std::string_view name) const;

  const std::string& protected_feature() const { return protected_; }
  std::size_t protected_index() const { return index_of(protected_); }
  const std::string& target_feature() const { return target_; }
  std::vector<std::size_t> actionable_indices() const;

  double normalize(std::size_t feature, double value) const;
  double denormalize(std::size_t feature, double value) const;
  double normalize(std::string_view feature, double value) const;
  double denormalize(std::string_view feature, double value) const;
  Instance normalize(std::span<const double> raw) const;
  Instance denormalize(std::span<const double> normalized) const;

  // Structural invariants that hold with or without fitted ranges.
  void validate_structure() const;
  // Range invariants; call after fitting.
  void validate_ranges() const;

  // Stable hash of names, kinds, flags and ranges (hex string). Persisted
  // models carry it so they are never applied to a different schema.
  std::string fingerprint() const;

 private:
  std::vector<FeatureSpec> features_;
  std::string protected_;
  std::string target_;
};

class Dataset {
 public:
  Dataset() = default;

  // Fits observed ranges from `rows` (respecting overrides), then validates
  // the schema and every row against it.
  static Dataset fit(FeatureSchema schema, std::vector<Instance> rows, std::vector<int> labels);

  // Keeps the schema ranges as given; rows must already lie inside them.
  static Dataset with_fitted_schema(FeatureSchema schema, std::vector<Instance> rows,
                                    std::vector<int> labels);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const Instance& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<Instance>& rows() const { return rows_; }
  int label(std::size_t i) const { return labels_.at(i); }
  const std::vector<int>& labels() const { return labels_; }
  int group(std::size_t i) const;

  // Normalized view, computed once at construction.
  const std::vector<Instance>& normalized_rows() const { return normalized_; }
  const Instance& normalized_row(std::size_t i) const { return normalized_.at(i); }

  // Rows at `indices`, sharing this dataset's fitted schema.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Dataset(FeatureSchema schema, std::vector<Instance> rows, std::vector<int> labels);
  void validate_rows() const;

  FeatureSchema schema_;
  std::vector<Instance> rows_;
  std::vector<int> labels_;
  std::vector<Instance> normalized_;
};

Dataset load_csv(const std::filesystem::path& csv, const std::filesystem::path& schema_config);
Dataset load_csv(std::istream& csv, FeatureSchema schema);

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Deterministic seeded shuffle, first `train_fraction` of rows to train.
TrainTestSplit train_test_split(std::size_t rows, double train_fraction, std::uint64_t seed);

// Rows the classifier rejects, split by protected value.
struct AffectedSet {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> group0;
  std::vector<std::size_t> group1;
};

// Throws EmptyPopulationError when no row is predicted unfavorably.
AffectedSet affected_subset(const Dataset& ds, const Classifier& h);
AffectedSet affected_subset(const Dataset& ds, const Classifier& h,
                            std::span<const std::size_t> candidate_rows);

// Normalized instances handed to the fairness metrics and the environment.
struct Population {
  std::vector<Instance> rows;
  std::vector<int> groups;  // protected value per row, 0 or 1
  std::vector<std::size_t> source_rows;

  std::size_t size() const { return rows.size(); }
  std::vector<Instance> members(int group) const;
  std::size_t count(int group) const;
};

Population make_population(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace faircf

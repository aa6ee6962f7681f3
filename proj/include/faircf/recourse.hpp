#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "faircf/tabular.hpp"
#include "json.hpp"

namespace faircf {

class Classifier;
class Autoencoder;

// Normalized deltas below this magnitude are treated as exactly zero.
inline constexpr double kZeroDelta = 1e-6;

// A shared transformation: one additive normalized delta per actionable
// feature, in the schema's actionable-feature order.
struct Action {
  std::vector<double> deltas;

  bool is_zero() const;
};

struct ActionSet {
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  // Row-major flattening: the RL state vector of length n * l.
  std::vector<double> flatten() const;
  static ActionSet unflatten(std::span<const double> state, std::size_t actionable_count);
};

// Binds actions to a schema: which features they touch and how to keep the
// result inside the observed ranges.
class ActionSpace {
 public:
  explicit ActionSpace(FeatureSchema schema);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<std::size_t>& actionable() const { return actionable_; }
  std::size_t actionable_count() const { return actionable_.size(); }
  bool is_actionable(std::size_t feature) const;

  // Continuous: x + delta clipped to [0, 1]. Ordinal: clipped, then rounded to
  // the nearest integer level in raw units (half away from zero) and mapped
  // back. Non-actionable features are copied.
  Instance apply(std::span<const double> x, const Action& action) const;

  // Raw-unit value of each delta, for reporting.
  std::vector<double> raw_deltas(const Action& action) const;

  Action zero_action() const { return Action{std::vector<double>(actionable_.size(), 0.0)}; }

 private:
  FeatureSchema schema_;
  std::vector<std::size_t> actionable_;
  std::vector<bool> actionable_mask_;
};

// Mean per-feature Gower term between two normalized instances: |v - v'| for
// continuous/ordinal (already range-scaled), 0/1 mismatch for nominal, 0 for
// constant features.
double gower(std::span<const double> x, std::span<const double> x_prime, const FeatureSchema& schema);

// Gower restricted to the listed features.
double gower_subset(std::span<const double> x, std::span<const double> x_prime,
                    const FeatureSchema& schema, std::span<const std::size_t> features);

struct SelectedCf {
  std::size_t action_index = 0;
  Instance counterfactual;
  double gower = 0.0;
};

// Lowest-Gower action among those that flip h; ties go to the lower index.
std::optional<SelectedCf> select_best(std::span<const double> x, const ActionSet& actions,
                                      const Classifier& h, const ActionSpace& space);

struct CfPair {
  Instance original;
  Instance counterfactual;
};

struct CfQuality {
  double validity = 0.0;
  double plausibility = 0.0;
  double similarity = 0.0;
  double minimality = 0.0;
  bool actionability = true;
  std::size_t count = 0;

  nlohmann::json to_json() const;
};

// Per-pair metrics averaged over `pairs`. Minimality counts features whose
// denormalized value changed; actionability requires every change to be on an
// actionable feature. Throws DataError on an empty input.
CfQuality cf_quality(std::span<const CfPair> pairs, const Classifier& h, const Autoencoder& ae,
                     const ActionSpace& space, int target = 1);

}  // namespace faircf

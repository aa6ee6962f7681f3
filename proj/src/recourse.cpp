#include "faircf/recourse.hpp"

#include <algorithm>
#include <cmath>

#include "faircf/errors.hpp"
#include "faircf/model.hpp"

namespace faircf {

bool Action::is_zero() const {
  return std::all_of(deltas.begin(), deltas.end(), [](double d) { return std::abs(d) < kZeroDelta; });
}

std::vector<double> ActionSet::flatten() const {
  std::vector<double> state;
  for (const auto& a : actions) state.insert(state.end(), a.deltas.begin(), a.deltas.end());
  return state;
}

ActionSet ActionSet::unflatten(std::span<const double> state, std::size_t actionable_count) {
  if (actionable_count == 0 || state.size() % actionable_count != 0) {
    throw ShapeError("state length " + std::to_string(state.size()) +
                     " is not a multiple of the actionable feature count");
  }
  ActionSet set;
  for (std::size_t offset = 0; offset < state.size(); offset += actionable_count) {
    set.actions.push_back(Action{std::vector<double>(state.begin() + static_cast<long>(offset),
                                                     state.begin() + static_cast<long>(offset + actionable_count))});
  }
  return set;
}

ActionSpace::ActionSpace(FeatureSchema schema)
    : schema_(std::move(schema)), actionable_(schema_.actionable_indices()) {
  actionable_mask_.assign(schema_.size(), false);
  for (std::size_t j : actionable_) actionable_mask_[j] = true;
}

bool ActionSpace::is_actionable(std::size_t feature) const { return actionable_mask_.at(feature); }

Instance ActionSpace::apply(std::span<const double> x, const Action& action) const {
  if (x.size() != schema_.size()) {
    throw ShapeError("instance has " + std::to_string(x.size()) + " values, schema has " +
                     std::to_string(schema_.size()));
  }
  if (action.deltas.size() != actionable_.size()) {
    throw ShapeError("action has " + std::to_string(action.deltas.size()) + " deltas, expected " +
                     std::to_string(actionable_.size()));
  }
  Instance out(x.begin(), x.end());
  for (std::size_t k = 0; k < actionable_.size(); ++k) {
    const double delta = action.deltas[k];
    if (std::abs(delta) < kZeroDelta) continue;
    const std::size_t j = actionable_[k];
    double v = std::clamp(x[j] + delta, 0.0, 1.0);
    if (schema_.feature(j).kind == FeatureKind::kOrdinal) {
      const FeatureSpec& f = schema_.feature(j);
      double level = std::round(schema_.denormalize(j, v));
      level = std::clamp(level, std::ceil(f.observed_min), std::floor(f.observed_max));
      v = std::clamp(schema_.normalize(j, level), 0.0, 1.0);
    }
    out[j] = v;
  }
  return out;
}

std::vector<double> ActionSpace::raw_deltas(const Action& action) const {
  std::vector<double> raw(action.deltas.size());
  for (std::size_t k = 0; k < action.deltas.size(); ++k) {
    const double d = std::abs(action.deltas[k]) < kZeroDelta ? 0.0 : action.deltas[k];
    raw[k] = d * schema_.feature(actionable_[k]).range();
  }
  return raw;
}

namespace {

double gower_term(double a, double b, const FeatureSpec& f) {
  if (f.kind == FeatureKind::kNominal) return a == b ? 0.0 : 1.0;
  if (f.is_constant()) return 0.0;
  return std::abs(a - b);
}

}  // namespace

double gower(std::span<const double> x, std::span<const double> x_prime, const FeatureSchema& schema) {
  if (x.size() != schema.size() || x_prime.size() != schema.size()) {
    throw ShapeError("gower: instances do not match the schema's feature count");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) total += gower_term(x[j], x_prime[j], schema.feature(j));
  return total / static_cast<double>(x.size());
}

double gower_subset(std::span<const double> x, std::span<const double> x_prime,
                    const FeatureSchema& schema, std::span<const std::size_t> features) {
  if (x.size() != schema.size() || x_prime.size() != schema.size()) {
    throw ShapeError("gower: instances do not match the schema's feature count");
  }
  if (features.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t j : features) total += gower_term(x[j], x_prime[j], schema.feature(j));
  return total / static_cast<double>(features.size());
}

std::optional<SelectedCf> select_best(std::span<const double> x, const ActionSet& actions,
                                      const Classifier& h, const ActionSpace& space) {
  std::optional<SelectedCf> best;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Instance cf = space.apply(x, actions.actions[i]);
    if (h.predict(cf) != 1) continue;
    const double g = gower(x, cf, space.schema());
    if (!best || g < best->gower) best = SelectedCf{i, std::move(cf), g};
  }
  return best;
}

nlohmann::json CfQuality::to_json() const {
  return {{"validity", validity},   {"plausibility", plausibility}, {"similarity", similarity},
          {"minimality", minimality}, {"actionability", actionability}, {"count", count}};
}

CfQuality cf_quality(std::span<const CfPair> pairs, const Classifier& h, const Autoencoder& ae,
                     const ActionSpace& space, int target) {
  if (pairs.empty()) throw DataError("cf_quality needs at least one (x, x') pair");
  const FeatureSchema& schema = space.schema();
  CfQuality q;
  q.count = pairs.size();
  for (const auto& [x, cf] : pairs) {
    if (h.predict(cf) == target) q.validity += 1.0;
    q.plausibility += plausibility(ae, cf);
    q.similarity += gower(x, cf, schema);
    int changed = 0;
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema.denormalize(j, x[j]) != schema.denormalize(j, cf[j])) {
        ++changed;
        if (!space.is_actionable(j)) q.actionability = false;
      }
    }
    q.minimality += changed;
  }
  const double n = static_cast<double>(pairs.size());
  q.validity /= n;
  q.plausibility /= n;
  q.similarity /= n;
  q.minimality /= n;
  return q;
}

}  // namespace faircf

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "faircf/recourse.hpp"
#include "faircf/tabular.hpp"

namespace faircf {

class Classifier;

// Favorable pool for nearest-unlike-neighbor lookups: the candidate rows the
// classifier predicts as 1.
class NunIndex {
 public:
  // Throws EmptyPopulationError when no candidate is predicted favorable.
  NunIndex(std::span<const Instance> candidates, const Classifier& h, const ActionSpace& space);

  std::size_t size() const { return pool_.size(); }
  const Instance& member(std::size_t i) const { return pool_.at(i); }
  // Lowest Gower distance over actionable features; ties to the lowest index.
  std::size_t nearest(std::span<const double> x) const;
  const ActionSpace& space() const { return *space_; }

 private:
  std::vector<Instance> pool_;
  const ActionSpace* space_;
};

struct NunResult {
  Instance counterfactual;
  int changed = 0;
  std::size_t neighbor = 0;
};

// NUN-style counterfactual: copy actionable values from the nearest favorable
// neighbor one at a time, each time picking the copy that raises h's score
// most, until h flips. nullopt when copying every actionable value does not
// flip the prediction.
std::optional<NunResult> nun_counterfactual(std::span<const double> x, const NunIndex& index,
                                            const Classifier& h);

}  // namespace faircf

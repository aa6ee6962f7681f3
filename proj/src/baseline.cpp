#include "faircf/baseline.hpp"

#include <limits>

#include "faircf/errors.hpp"
#include "faircf/model.hpp"

namespace faircf {

NunIndex::NunIndex(std::span<const Instance> candidates, const Classifier& h, const ActionSpace& space)
    : space_(&space) {
  for (const auto& x : candidates) {
    if (h.predict(x) == 1) pool_.push_back(x);
  }
  if (pool_.empty()) throw EmptyPopulationError("no favorable instance available for the NUN baseline");
}

std::size_t NunIndex::nearest(std::span<const double> x) const {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    const double d = gower_subset(x, pool_[i], space_->schema(), space_->actionable());
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

std::optional<NunResult> nun_counterfactual(std::span<const double> x, const NunIndex& index,
                                            const Classifier& h) {
  const std::size_t neighbor_index = index.nearest(x);
  const Instance& neighbor = index.member(neighbor_index);
  Instance current(x.begin(), x.end());

  std::vector<std::size_t> remaining;
  for (std::size_t j : index.space().actionable()) {
    if (current[j] != neighbor[j]) remaining.push_back(j);
  }
  int changed = 0;
  while (!remaining.empty()) {
    std::size_t pick = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      Instance trial = current;
      trial[remaining[r]] = neighbor[remaining[r]];
      const double s = h.score(trial);
      if (s > best_score) {
        best_score = s;
        pick = r;
      }
    }
    current[remaining[pick]] = neighbor[remaining[pick]];
    remaining.erase(remaining.begin() + static_cast<long>(pick));
    ++changed;
    if (h.predict(current) == 1) return NunResult{std::move(current), changed, neighbor_index};
  }
  return std::nullopt;
}

}  // namespace faircf

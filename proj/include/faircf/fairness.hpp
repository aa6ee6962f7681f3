#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "faircf/recourse.hpp"
#include "faircf/tabular.hpp"
#include "json.hpp"

namespace faircf {

class Classifier;

// Coverage of one action: fraction of `group` flipped to the favorable class.
double effectiveness(const Action& action, std::span<const Instance> group, const Classifier& h,
                     const ActionSpace& space);

// Fraction of `group` for whom at least one action in the set works.
double micro_effectiveness(const ActionSet& actions, std::span<const Instance> group,
                           const Classifier& h, const ActionSpace& space);

struct MacroEffectiveness {
  double value = 0.0;
  std::size_t best_action = 0;
};

// Best single-action coverage; ties go to the lowest index.
MacroEffectiveness macro_effectiveness(const ActionSet& actions, std::span<const Instance> group,
                                       const Classifier& h, const ActionSpace& space);

struct EeGaps {
  double micro_gap = 0.0;
  double macro_gap = 0.0;
  bool micro_satisfied = false;
  bool macro_satisfied = false;
};

EeGaps ee_gaps(const ActionSet& actions, std::span<const Instance> group0,
               std::span<const Instance> group1, const Classifier& h, const ActionSpace& space,
               double epsilon = 0.10);

struct ActionCounts {
  int a0 = 0;
  int a1 = 0;
  int ad = 0;
  // ad == 0 and both counts reach the required minimum.
  bool ecr_satisfied = false;
};

// Actions whose coverage of each group reaches `phi`.
ActionCounts effective_action_counts(const ActionSet& actions, std::span<const Instance> group0,
                                     std::span<const Instance> group1, const Classifier& h,
                                     const ActionSpace& space, double phi, int min_actions = 1);

// Non-zero actions whose coverage of `population` reaches `alpha`.
int active_actions(const ActionSet& actions, std::span<const Instance> population,
                   const Classifier& h, const ActionSpace& space, double alpha);

// How a group's success rate is read off an action set.
enum class SuccessRule {
  kMicro,  // any action works for the individual
  kMacro,  // best single shared action
};

struct SnapshotOptions {
  SuccessRule success_rule = SuccessRule::kMicro;
  double alpha = 0.1;
  double phi = 0.6;
};

struct FairnessSnapshot {
  double sr0 = 0.0;
  double sr1 = 0.0;
  double asr = 0.0;
  double pd = 0.0;
  double micro_eff0 = 0.0;
  double micro_eff1 = 0.0;
  double macro_eff0 = 0.0;
  double macro_eff1 = 0.0;
  int active_count = 0;
  int a0_count = 0;
  int a1_count = 0;
  int ad = 0;
  // Mean Gower distance of recoursed individuals under their selected action;
  // 0 when nobody has recourse.
  double mean_gower = 0.0;
  std::size_t recoursed = 0;

  nlohmann::json to_json() const;
  bool operator==(const FairnessSnapshot&) const = default;
};

// Everything the reward and stopping rules need, from one pass over
// (action, individual) pairs.
FairnessSnapshot compute_snapshot(const ActionSet& actions, const Population& population,
                                  const Classifier& h, const ActionSpace& space,
                                  const SnapshotOptions& options = {});

// success[a][i] = h(apply(x_i, a)) == 1
std::vector<std::vector<bool>> success_matrix(const ActionSet& actions,
                                              std::span<const Instance> group, const Classifier& h,
                                              const ActionSpace& space);

}  // namespace faircf

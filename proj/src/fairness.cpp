#include "faircf/fairness.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "faircf/errors.hpp"
#include "faircf/model.hpp"

namespace faircf {

namespace {

void require_nonempty(std::span<const Instance> group, const char* what) {
  if (group.empty()) throw EmptyPopulationError(std::string(what) + ": group is empty");
}

double coverage(const std::vector<bool>& hits) {
  std::size_t count = 0;
  for (bool b : hits) count += b ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(hits.size());
}

int count_reaching(const std::vector<std::vector<bool>>& success, double threshold) {
  int count = 0;
  for (const auto& row : success) {
    if (coverage(row) >= threshold) ++count;
  }
  return count;
}

double micro_from(const std::vector<std::vector<bool>>& success, std::size_t members) {
  std::size_t covered = 0;
  for (std::size_t i = 0; i < members; ++i) {
    for (const auto& row : success) {
      if (row[i]) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(members);
}

MacroEffectiveness macro_from(const std::vector<std::vector<bool>>& success) {
  MacroEffectiveness best;
  for (std::size_t a = 0; a < success.size(); ++a) {
    const double eff = coverage(success[a]);
    if (eff > best.value) best = {eff, a};
  }
  return best;
}

}  // namespace

std::vector<std::vector<bool>> success_matrix(const ActionSet& actions,
                                              std::span<const Instance> group, const Classifier& h,
                                              const ActionSpace& space) {
  std::vector<std::vector<bool>> success(actions.size(), std::vector<bool>(group.size(), false));
  for (std::size_t a = 0; a < actions.size(); ++a) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      success[a][i] = h.predict(space.apply(group[i], actions.actions[a])) == 1;
    }
  }
  return success;
}

double effectiveness(const Action& action, std::span<const Instance> group, const Classifier& h,
                     const ActionSpace& space) {
  require_nonempty(group, "effectiveness");
  std::size_t hits = 0;
  for (const auto& x : group) hits += h.predict(space.apply(x, action)) == 1 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(group.size());
}

double micro_effectiveness(const ActionSet& actions, std::span<const Instance> group,
                           const Classifier& h, const ActionSpace& space) {
  require_nonempty(group, "micro_effectiveness");
  return micro_from(success_matrix(actions, group, h, space), group.size());
}

MacroEffectiveness macro_effectiveness(const ActionSet& actions, std::span<const Instance> group,
                                       const Classifier& h, const ActionSpace& space) {
  require_nonempty(group, "macro_effectiveness");
  return macro_from(success_matrix(actions, group, h, space));
}

EeGaps ee_gaps(const ActionSet& actions, std::span<const Instance> group0,
               std::span<const Instance> group1, const Classifier& h, const ActionSpace& space,
               double epsilon) {
  require_nonempty(group0, "ee_gaps");
  require_nonempty(group1, "ee_gaps");
  const auto s0 = success_matrix(actions, group0, h, space);
  const auto s1 = success_matrix(actions, group1, h, space);
  EeGaps gaps;
  gaps.micro_gap = std::abs(micro_from(s0, group0.size()) - micro_from(s1, group1.size()));
  gaps.macro_gap = std::abs(macro_from(s0).value - macro_from(s1).value);
  gaps.micro_satisfied = gaps.micro_gap <= epsilon;
  gaps.macro_satisfied = gaps.macro_gap <= epsilon;
  return gaps;
}

ActionCounts effective_action_counts(const ActionSet& actions, std::span<const Instance> group0,
                                     std::span<const Instance> group1, const Classifier& h,
                                     const ActionSpace& space, double phi, int min_actions) {
  if (!(phi > 0.0 && phi <= 1.0)) throw ConfigError("phi must lie in (0, 1]");
  require_nonempty(group0, "effective_action_counts");
  require_nonempty(group1, "effective_action_counts");
  ActionCounts counts;
  counts.a0 = count_reaching(success_matrix(actions, group0, h, space), phi);
  counts.a1 = count_reaching(success_matrix(actions, group1, h, space), phi);
  counts.ad = std::abs(counts.a0 - counts.a1);
  counts.ecr_satisfied = counts.ad == 0 && counts.a0 >= min_actions && counts.a1 >= min_actions;
  return counts;
}

int active_actions(const ActionSet& actions, std::span<const Instance> population,
                   const Classifier& h, const ActionSpace& space, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (population.empty()) return 0;
  int count = 0;
  for (const auto& a : actions.actions) {
    if (a.is_zero()) continue;
    if (effectiveness(a, population, h, space) >= alpha) ++count;
  }
  return count;
}

nlohmann::json FairnessSnapshot::to_json() const {
  return {{"sr", {sr0, sr1}},
          {"asr", asr},
          {"pd", pd},
          {"micro_effectiveness", {micro_eff0, micro_eff1}},
          {"macro_effectiveness", {macro_eff0, macro_eff1}},
          {"active_actions", active_count},
          {"action_counts", {a0_count, a1_count}},
          {"ad", ad},
          {"mean_gower", mean_gower},
          {"recoursed", recoursed}};
}

FairnessSnapshot compute_snapshot(const ActionSet& actions, const Population& population,
                                  const Classifier& h, const ActionSpace& space,
                                  const SnapshotOptions& options) {
  const std::size_t n_actions = actions.size();
  const std::size_t n_rows = population.size();
  std::size_t group_size[2] = {population.count(0), population.count(1)};
  if (group_size[0] == 0 || group_size[1] == 0) {
    throw EmptyPopulationError("snapshot needs both protected groups in the population");
  }

  // hits[a][g]: members of group g flipped by action a; union_hits[a] over both.
  std::vector<std::array<std::size_t, 2>> hits(n_actions, {0, 0});
  std::size_t covered[2] = {0, 0};
  double gower_sum = 0.0;
  std::size_t recoursed = 0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    const Instance& x = population.rows[i];
    const int g = population.groups[i];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n_actions; ++a) {
      const Action& action = actions.actions[a];
      Instance cf = space.apply(x, action);
      if (h.predict(cf) != 1) continue;
      ++hits[a][g];
      best = std::min(best, gower(x, cf, space.schema()));
    }
    if (std::isfinite(best)) {
      ++covered[g];
      ++recoursed;
      gower_sum += best;
    }
  }

  FairnessSnapshot s;
  s.micro_eff0 = static_cast<double>(covered[0]) / group_size[0];
  s.micro_eff1 = static_cast<double>(covered[1]) / group_size[1];
  for (std::size_t a = 0; a < n_actions; ++a) {
    const double e0 = static_cast<double>(hits[a][0]) / group_size[0];
    const double e1 = static_cast<double>(hits[a][1]) / group_size[1];
    s.macro_eff0 = std::max(s.macro_eff0, e0);
    s.macro_eff1 = std::max(s.macro_eff1, e1);
    if (e0 >= options.phi) ++s.a0_count;
    if (e1 >= options.phi) ++s.a1_count;
    const double union_eff = static_cast<double>(hits[a][0] + hits[a][1]) / n_rows;
    if (!actions.actions[a].is_zero() && union_eff >= options.alpha) ++s.active_count;
  }
  if (options.success_rule == SuccessRule::kMicro) {
    s.sr0 = s.micro_eff0;
    s.sr1 = s.micro_eff1;
  } else {
    s.sr0 = s.macro_eff0;
    s.sr1 = s.macro_eff1;
  }
  s.asr = (s.sr0 + s.sr1) / 2.0;
  s.pd = std::abs(s.sr0 - s.sr1);
  s.ad = std::abs(s.a0_count - s.a1_count);
  s.recoursed = recoursed;
  s.mean_gower = recoursed > 0 ? gower_sum / static_cast<double>(recoursed) : 0.0;
  return s;
}

}  // namespace faircf

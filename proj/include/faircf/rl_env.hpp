#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faircf/fairness.hpp"
#include "faircf/recourse.hpp"
#include "faircf/sac.hpp"
#include "faircf/tabular.hpp"
#include "json.hpp"

namespace faircf {

class Classifier;

enum class Scenario { kIndividualEE, kGroupEE, kGroupECR, kHybridEEECR };

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view text);  // individual-ee | group-ee | group-ecr | hybrid

// Weights of the equal-effectiveness reward: ASR, Act, PD, Sim.
struct EeCoefficients {
  double asr = 1.0;
  double act = 1.0;
  double pd = 1.0;
  double sim = 1.0;
};

// Weights of the equal-choice reward: A0, A1, AD, Act, Sim.
struct EcrCoefficients {
  double a0 = 1.0;
  double a1 = 1.0;
  double ad = 1.0;
  double act = 1.0;
  double sim = 1.0;
  // The printed ECR reward subtracts Act while its description treats active
  // actions as a benefit. Default adds it; set true to subtract.
  bool act_is_penalty = false;
};

struct StoppingTargets {
  double success_rate = 0.85;
  double pd = 0.10;
  int min_actions_per_group = 1;
  int ad = 0;
};

struct ScenarioSpec {
  Scenario scenario = Scenario::kHybridEEECR;
  int max_actions = 5;
  EeCoefficients ee;
  EcrCoefficients ecr;
  double alpha = 0.1;
  double phi = 0.6;
  StoppingTargets targets;
  int max_steps_per_episode = 100;
  // Success-rate target for Group-EE, where SR is the best single action's coverage.
  double group_ee_threshold = 0.75;

  void validate() const;  // throws ConfigError
  SnapshotOptions snapshot_options() const;
  nlohmann::json to_json() const;
  static ScenarioSpec from_json(const nlohmann::json& doc);
};

// Reward inputs. Counts are divided by n when taken from a snapshot so the
// coefficients mean the same thing for any number of actions.
struct RewardTerms {
  double asr = 0.0;
  double pd = 0.0;
  double sim = 0.0;
  double act = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double ad = 0.0;
};

RewardTerms reward_terms(const FairnessSnapshot& snapshot, int max_actions);

// ASR C0 + Act C1 - PD C2 - Sim C3
double reward_ee(const RewardTerms& t, const EeCoefficients& c);
// A0 C0 + A1 C1 - AD C2 +/- Act C3 - Sim C4
double reward_ecr(const RewardTerms& t, const EcrCoefficients& c);
double reward_hybrid(const RewardTerms& t, const EeCoefficients& ee, const EcrCoefficients& ecr);

double scenario_reward(const FairnessSnapshot& snapshot, const ScenarioSpec& spec);

bool ee_satisfied(const FairnessSnapshot& snapshot, double success_target, double pd_target);
bool ecr_satisfied(const FairnessSnapshot& snapshot, const StoppingTargets& targets);
bool stopping(const FairnessSnapshot& snapshot, const ScenarioSpec& spec);

// Agent action {a1, a2}: a1 picks the flattened (slot, feature) index, a2 is
// the delta increment.
struct AgentAction {
  double a1 = 0.0;
  double a2 = 0.0;
};

// floor((a1 + 1) / 2 * N) clamped to [0, N).
std::size_t decode_index(double a1, std::size_t state_length);

struct EnvState {
  std::vector<double> deltas;  // n x l, row-major, each in [-1, 1]
  int step_count = 0;
  FairnessSnapshot snapshot;
  double reward = 0.0;
  bool done = false;
  bool stopped = false;  // done because the scenario's targets were met
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
  FairnessSnapshot info;
};

// An action set emitted by the environment, ranked for "best so far".
struct Candidate {
  ActionSet actions;
  FairnessSnapshot snapshot;
  bool satisfied = false;
  int episode = -1;
};

// Targets met first, then higher ASR, then lower mean Gower.
bool better_candidate(const Candidate& a, const Candidate& b);

class FairRecourseEnv final : public sac::Environment {
 public:
  FairRecourseEnv(Population population, const Classifier& h, ActionSpace space, ScenarioSpec spec);

  const EnvState& reset_state();
  StepResult step(const AgentAction& action);
  const EnvState& state() const { return state_; }

  std::size_t state_length() const { return state_.deltas.size(); }
  const ScenarioSpec& spec() const { return spec_; }
  const ActionSpace& space() const { return space_; }
  const Population& population() const { return population_; }
  const Classifier& classifier() const { return *h_; }
  ActionSet action_set() const;
  FairnessSnapshot evaluate(const ActionSet& actions) const;

  // Best terminal state seen across episodes.
  const std::optional<Candidate>& best() const { return best_; }

  // One JSON line per step: {episode, step, reward, asr, pd, a0, a1, ad, act, sim}.
  void set_trajectory_log(std::ostream* out) { log_ = out; }

  // sac::Environment
  int observation_dim() const override { return static_cast<int>(state_length()); }
  int action_dim() const override { return 2; }
  std::vector<double> reset() override;
  sac::EnvStep step(std::span<const double> action) override;

 private:
  void finish_episode();

  Population population_;
  const Classifier* h_;
  ActionSpace space_;
  ScenarioSpec spec_;
  EnvState state_;
  int episode_ = -1;
  std::optional<Candidate> best_;
  std::ostream* log_ = nullptr;
};

}  // namespace faircf

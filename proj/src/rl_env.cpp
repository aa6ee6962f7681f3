#include "faircf/rl_env.hpp"

#include <algorithm>
#include <cmath>

#include "faircf/errors.hpp"
#include "faircf/model.hpp"

namespace faircf {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kIndividualEE: return "individual-ee";
    case Scenario::kGroupEE: return "group-ee";
    case Scenario::kGroupECR: return "group-ecr";
    case Scenario::kHybridEEECR: return "hybrid";
  }
  return "hybrid";
}

Scenario scenario_from_string(std::string_view text) {
  if (text == "individual-ee") return Scenario::kIndividualEE;
  if (text == "group-ee") return Scenario::kGroupEE;
  if (text == "group-ecr") return Scenario::kGroupECR;
  if (text == "hybrid" || text == "hybrid-ee-ecr") return Scenario::kHybridEEECR;
  throw ConfigError("unknown scenario '" + std::string(text) +
                    "' (expected individual-ee, group-ee, group-ecr or hybrid)");
}

void ScenarioSpec::validate() const {
  auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (max_actions < 1) throw ConfigError("max_actions must be at least 1");
  if (max_steps_per_episode < 1) throw ConfigError("max_steps_per_episode must be at least 1");
  if (!unit(alpha) || !unit(phi) || !unit(group_ee_threshold) || !unit(targets.success_rate) ||
      !unit(targets.pd)) {
    throw ConfigError("alpha, phi and thresholds must lie in (0, 1]");
  }
  if (targets.min_actions_per_group < 0 || targets.ad < 0) {
    throw ConfigError("action-count targets must be non-negative");
  }
  for (double c : {ee.asr, ee.act, ee.pd, ee.sim, ecr.a0, ecr.a1, ecr.ad, ecr.act, ecr.sim}) {
    if (!(c >= 0.0)) throw ConfigError("reward coefficients must be non-negative");
  }
}

SnapshotOptions ScenarioSpec::snapshot_options() const {
  SnapshotOptions o;
  o.success_rule = scenario == Scenario::kGroupEE ? SuccessRule::kMacro : SuccessRule::kMicro;
  o.alpha = alpha;
  o.phi = phi;
  return o;
}

nlohmann::json ScenarioSpec::to_json() const {
  return {{"scenario", std::string(to_string(scenario))},
          {"max_actions", max_actions},
          {"alpha", alpha},
          {"phi", phi},
          {"group_ee_threshold", group_ee_threshold},
          {"max_steps_per_episode", max_steps_per_episode},
          {"ee_coefficients", {{"asr", ee.asr}, {"act", ee.act}, {"pd", ee.pd}, {"sim", ee.sim}}},
          {"ecr_coefficients",
           {{"a0", ecr.a0},
            {"a1", ecr.a1},
            {"ad", ecr.ad},
            {"act", ecr.act},
            {"sim", ecr.sim},
            {"act_is_penalty", ecr.act_is_penalty}}},
          {"targets",
           {{"success_rate", targets.success_rate},
            {"pd", targets.pd},
            {"min_actions_per_group", targets.min_actions_per_group},
            {"ad", targets.ad}}}};
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& doc) {
  ScenarioSpec s;
  try {
    if (doc.contains("scenario")) s.scenario = scenario_from_string(doc.at("scenario").get<std::string>());
    s.max_actions = doc.value("max_actions", s.max_actions);
    s.alpha = doc.value("alpha", s.alpha);
    s.phi = doc.value("phi", s.phi);
    s.group_ee_threshold = doc.value("group_ee_threshold", s.group_ee_threshold);
    s.max_steps_per_episode = doc.value("max_steps_per_episode", s.max_steps_per_episode);
    if (doc.contains("ee_coefficients")) {
      const auto& c = doc.at("ee_coefficients");
      s.ee.asr = c.value("asr", s.ee.asr);
      s.ee.act = c.value("act", s.ee.act);
      s.ee.pd = c.value("pd", s.ee.pd);
      s.ee.sim = c.value("sim", s.ee.sim);
    }
    if (doc.contains("ecr_coefficients")) {
      const auto& c = doc.at("ecr_coefficients");
      s.ecr.a0 = c.value("a0", s.ecr.a0);
      s.ecr.a1 = c.value("a1", s.ecr.a1);
      s.ecr.ad = c.value("ad", s.ecr.ad);
      s.ecr.act = c.value("act", s.ecr.act);
      s.ecr.sim = c.value("sim", s.ecr.sim);
      s.ecr.act_is_penalty = c.value("act_is_penalty", s.ecr.act_is_penalty);
    }
    if (doc.contains("targets")) {
      const auto& t = doc.at("targets");
      s.targets.success_rate = t.value("success_rate", s.targets.success_rate);
      s.targets.pd = t.value("pd", s.targets.pd);
      s.targets.min_actions_per_group = t.value("min_actions_per_group", s.targets.min_actions_per_group);
      s.targets.ad = t.value("ad", s.targets.ad);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario config: ") + e.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Rewards and stopping

RewardTerms reward_terms(const FairnessSnapshot& snapshot, int max_actions) {
  const double n = static_cast<double>(max_actions);
  RewardTerms t;
  t.asr = snapshot.asr;
  t.pd = snapshot.pd;
  t.sim = snapshot.mean_gower;
  t.act = snapshot.active_count / n;
  t.a0 = snapshot.a0_count / n;
  t.a1 = snapshot.a1_count / n;
  t.ad = snapshot.ad / n;
  return t;
}

double reward_ee(const RewardTerms& t, const EeCoefficients& c) {
  return t.asr * c.asr + t.act * c.act - t.pd * c.pd - t.sim * c.sim;
}

double reward_ecr(const RewardTerms& t, const EcrCoefficients& c) {
  const double act = c.act_is_penalty ? -t.act * c.act : t.act * c.act;
  return t.a0 * c.a0 + t.a1 * c.a1 - t.ad * c.ad + act - t.sim * c.sim;
}

double reward_hybrid(const RewardTerms& t, const EeCoefficients& ee, const EcrCoefficients& ecr) {
  return reward_ee(t, ee) + reward_ecr(t, ecr);
}

double scenario_reward(const FairnessSnapshot& snapshot, const ScenarioSpec& spec) {
  const RewardTerms t = reward_terms(snapshot, spec.max_actions);
  switch (spec.scenario) {
    case Scenario::kIndividualEE:
    case Scenario::kGroupEE: return reward_ee(t, spec.ee);
    case Scenario::kGroupECR: return reward_ecr(t, spec.ecr);
    case Scenario::kHybridEEECR: return reward_hybrid(t, spec.ee, spec.ecr);
  }
  return 0.0;
}

bool ee_satisfied(const FairnessSnapshot& s, double success_target, double pd_target) {
  return s.asr >= success_target && s.pd <= pd_target;
}

bool ecr_satisfied(const FairnessSnapshot& s, const StoppingTargets& targets) {
  return s.a0_count >= targets.min_actions_per_group && s.a1_count >= targets.min_actions_per_group &&
         s.ad <= targets.ad;
}

bool stopping(const FairnessSnapshot& s, const ScenarioSpec& spec) {
  switch (spec.scenario) {
    case Scenario::kIndividualEE: return ee_satisfied(s, spec.targets.success_rate, spec.targets.pd);
    case Scenario::kGroupEE: return ee_satisfied(s, spec.group_ee_threshold, spec.targets.pd);
    case Scenario::kGroupECR: return ecr_satisfied(s, spec.targets);
    case Scenario::kHybridEEECR:
      return ee_satisfied(s, spec.targets.success_rate, spec.targets.pd) && ecr_satisfied(s, spec.targets);
  }
  return false;
}

std::size_t decode_index(double a1, std::size_t state_length) {
  if (state_length == 0) throw ShapeError("cannot decode an index into an empty state");
  const double scaled = std::floor((a1 + 1.0) / 2.0 * static_cast<double>(state_length));
  if (!(scaled >= 0.0)) return 0;  // also catches NaN
  return std::min(static_cast<std::size_t>(scaled), state_length - 1);
}

bool better_candidate(const Candidate& a, const Candidate& b) {
  if (a.satisfied != b.satisfied) return a.satisfied;
  if (a.snapshot.asr != b.snapshot.asr) return a.snapshot.asr > b.snapshot.asr;
  return a.snapshot.mean_gower < b.snapshot.mean_gower;
}

// ---------------------------------------------------------------------------
// Environment

FairRecourseEnv::FairRecourseEnv(Population population, const Classifier& h, ActionSpace space,
                                 ScenarioSpec spec)
    : population_(std::move(population)), h_(&h), space_(std::move(space)), spec_(std::move(spec)) {
  spec_.validate();
  if (population_.count(0) == 0 || population_.count(1) == 0) {
    throw EmptyPopulationError("environment population needs both protected groups");
  }
  state_.deltas.assign(static_cast<std::size_t>(spec_.max_actions) * space_.actionable_count(), 0.0);
  state_.done = true;  // reset() starts the first episode
}

ActionSet FairRecourseEnv::action_set() const {
  return ActionSet::unflatten(state_.deltas, space_.actionable_count());
}

FairnessSnapshot FairRecourseEnv::evaluate(const ActionSet& actions) const {
  return compute_snapshot(actions, population_, *h_, space_, spec_.snapshot_options());
}

const EnvState& FairRecourseEnv::reset_state() {
  ++episode_;
  std::fill(state_.deltas.begin(), state_.deltas.end(), 0.0);
  state_.step_count = 0;
  state_.snapshot = evaluate(action_set());
  state_.reward = scenario_reward(state_.snapshot, spec_);
  state_.done = false;
  state_.stopped = false;
  return state_;
}

StepResult FairRecourseEnv::step(const AgentAction& action) {
  if (state_.done) throw ContractViolation("step() called on a finished episode; call reset()");
  const std::size_t index = decode_index(action.a1, state_.deltas.size());
  const double increment = std::clamp(std::isfinite(action.a2) ? action.a2 : 0.0, -1.0, 1.0);
  state_.deltas[index] = std::clamp(state_.deltas[index] + increment, -1.0, 1.0);
  ++state_.step_count;
  state_.snapshot = evaluate(action_set());
  state_.reward = scenario_reward(state_.snapshot, spec_);
  state_.stopped = stopping(state_.snapshot, spec_);
  state_.done = state_.stopped || state_.step_count >= spec_.max_steps_per_episode;

  if (log_) {
    const FairnessSnapshot& s = state_.snapshot;
    nlohmann::json line = {{"episode", episode_}, {"step", state_.step_count}, {"reward", state_.reward},
                           {"asr", s.asr},         {"pd", s.pd},                {"a0", s.a0_count},
                           {"a1", s.a1_count},     {"ad", s.ad},                {"act", s.active_count},
                           {"sim", s.mean_gower}};
    *log_ << line.dump() << '\n';
  }
  if (state_.done) finish_episode();
  return StepResult{state_, state_.reward, state_.done, state_.snapshot};
}

void FairRecourseEnv::finish_episode() {
  Candidate c{action_set(), state_.snapshot, state_.stopped, episode_};
  if (!best_ || better_candidate(c, *best_)) best_ = std::move(c);
}

std::vector<double> FairRecourseEnv::reset() { return reset_state().deltas; }

sac::EnvStep FairRecourseEnv::step(std::span<const double> action) {
  if (action.size() != 2) throw ShapeError("environment actions are {a1, a2}");
  StepResult r = step(AgentAction{action[0], action[1]});
  return sac::EnvStep{std::move(r.state.deltas), r.reward, r.state.stopped, r.done && !r.state.stopped};
}

}  // namespace faircf

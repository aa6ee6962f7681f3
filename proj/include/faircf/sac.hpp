#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "faircf/nn.hpp"
#include "json.hpp"

namespace faircf::sac {

using nn::Matrix;
using nn::Vector;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

struct Batch {
  Matrix states;
  Matrix actions;
  Vector rewards;
  Matrix next_states;
  Vector dones;

  Eigen::Index size() const { return states.rows(); }
};

// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_.at(i); }

  // Distinct indices drawn uniformly (Floyd's algorithm); `count` is capped at size().
  std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;
  Batch gather(std::span<const std::size_t> indices) const;
  Batch sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct SacConfig {
  std::vector<int> hidden{64, 64};
  double lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t buffer_capacity = 100000;
  double initial_temperature = 1.0;
  // Defaults to -(action dim).
  std::optional<double> target_entropy;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static SacConfig from_json(const nlohmann::json& doc);
};

// Mean and clamped log-std read off a policy network's output columns
// [mean..., log_std...].
struct PolicyHeads {
  Matrix mean;
  Matrix log_std;
  // 1 where the raw log-std was inside the clamp range (gradient passes).
  Matrix log_std_pass;
};

PolicyHeads policy_heads(const Matrix& net_output, int action_dim);

struct SquashedSample {
  Matrix pre_squash;  // mean + std * noise
  Matrix actions;     // tanh(pre_squash)
  Vector log_prob;    // Gaussian log-density with the tanh Jacobian correction
};

SquashedSample squash(const PolicyHeads& heads, const Matrix& noise);

// Loss functions with analytic gradients. Each takes the randomness it needs
// explicitly so it can be checked against finite differences.
namespace losses {

// mean_b (Q(s_b, a_b) - target_b)^2
double q_loss(const nn::Mlp& q, const Matrix& states, const Matrix& actions, const Vector& targets,
              Vector* grad);

struct PolicyLoss {
  double loss = 0.0;
  Vector grad;
  Vector log_prob;
};

// mean_b (alpha * log pi(a~_b | s_b) - min(Q1, Q2)(s_b, a~_b)) with
// a~ = tanh(mean + std * noise). Gradient with respect to the policy params.
PolicyLoss policy_loss(const nn::Mlp& policy, const nn::Mlp& q1, const nn::Mlp& q2, double alpha,
                       const Matrix& states, const Matrix& noise);

// -log_alpha * mean(log_prob + target_entropy); derivative in log_alpha.
double temperature_loss(double log_alpha, const Vector& log_prob, double target_entropy,
                        double* grad);

// r + gamma (1 - done) (min(Q1', Q2')(s', a') - alpha log pi(a' | s')),
// a' = tanh(mean(s') + std(s') * noise).
Vector soft_targets(const nn::Mlp& policy, const nn::Mlp& target1, const nn::Mlp& target2,
                    double alpha, double gamma, const Batch& batch, const Matrix& noise);

}  // namespace losses

struct SacLosses {
  double q1 = 0.0;
  double q2 = 0.0;
  double policy = 0.0;
  double temperature = 0.0;
  double alpha = 0.0;
};

struct ActionSample {
  std::vector<double> action;
  std::vector<double> pre_squash;
  double log_prob = 0.0;
};

class SacAgent {
 public:
  SacAgent(int observation_dim, int action_dim, SacConfig config = {});

  int observation_dim() const { return observation_dim_; }
  int action_dim() const { return action_dim_; }
  const SacConfig& config() const { return config_; }

  // deterministic: tanh(mean); otherwise a reparameterized Gaussian draw.
  ActionSample sample_action(std::span<const double> state, bool deterministic);
  std::vector<double> random_action();

  // One gradient step on both critics, the policy and the temperature, then a
  // polyak step on the target critics. Throws DivergenceError on a non-finite loss.
  SacLosses update(const Batch& batch);

  double log_temperature() const { return log_alpha_; }
  double temperature() const { return std::exp(log_alpha_); }
  double target_entropy() const { return target_entropy_; }

  nn::Mlp& policy() { return policy_; }
  const nn::Mlp& policy() const { return policy_; }
  nn::Mlp& q1() { return q1_; }
  nn::Mlp& q2() { return q2_; }
  const nn::Mlp& target1() const { return target1_; }
  const nn::Mlp& target2() const { return target2_; }
  std::mt19937_64& rng() { return rng_; }

  nlohmann::json checkpoint() const;
  static SacAgent from_checkpoint(const nlohmann::json& doc);
  std::string config_fingerprint() const;

 private:
  Matrix gaussian_noise(Eigen::Index rows);

  int observation_dim_;
  int action_dim_;
  SacConfig config_;
  std::mt19937_64 rng_;
  nn::Mlp policy_;
  nn::Mlp q1_;
  nn::Mlp q2_;
  nn::Mlp target1_;
  nn::Mlp target2_;
  nn::Adam policy_opt_;
  nn::Adam q1_opt_;
  nn::Adam q2_opt_;
  nn::Adam alpha_opt_;
  double log_alpha_ = 0.0;
  double target_entropy_ = 0.0;
};

struct EnvStep {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;   // goal reached; no bootstrapping past it
  bool truncated = false;  // time limit; bootstrapping continues
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual EnvStep step(std::span<const double> action) = 0;
};

struct TrainConfig {
  int episodes = 200;
  int warmup_steps = 1000;
  int batch_size = 256;
  int updates_per_step = 1;
  int reward_window = 100;  // episodes in the rolling episode_reward_mean

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

struct TraceRow {
  long step = 0;  // environment steps taken when the episode ended
  int episode = 0;
  double episode_return = 0.0;
  int episode_length = 0;
  double episode_reward_mean = 0.0;
  double entropy_coefficient = 0.0;

  bool operator==(const TraceRow&) const = default;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  long total_steps = 0;
  std::size_t buffer_size = 0;
  std::size_t updates = 0;

  // Columns: step,episode_reward_mean,entropy_coefficient
  void write_csv(std::ostream& out) const;
  static TrainingTrace read_csv(std::istream& in);
  bool operator==(const TrainingTrace&) const = default;
};

// Runs `episodes` episodes. The first `warmup_steps` environment steps use
// uniform random actions; afterwards the policy acts and `updates_per_step`
// updates run per step.
TrainingTrace train(SacAgent& agent, Environment& env, const TrainConfig& config);

}  // namespace faircf::sac

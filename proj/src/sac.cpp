#include "faircf/sac.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "faircf/errors.hpp"

namespace faircf::sac {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Matrix concat_columns(const Matrix& left, const Matrix& right) {
  Matrix out(left.rows(), left.cols() + right.cols());
  out << left, right;
  return out;
}

Matrix row_matrix(std::span<const double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = v[j];
  return m;
}

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  if (in <= 0 || out <= 0) throw ConfigError("SAC dimensions must be positive");
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void require_finite(double value, const char* what, const SacLosses& so_far) {
  if (std::isfinite(value)) return;
  std::ostringstream msg;
  msg << "SAC " << what << " loss is not finite (q1=" << so_far.q1 << ", q2=" << so_far.q2
      << ", policy=" << so_far.policy << ", alpha=" << so_far.alpha << "); lower the learning rate";
  throw DivergenceError(msg.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::add(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
  const std::size_t n = data_.size();
  count = std::min(count, n);
  std::vector<std::size_t> out;
  out.reserve(count);
  std::unordered_set<std::size_t> chosen;
  for (std::size_t j = n - count; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    const std::size_t value = chosen.count(t) ? j : t;
    chosen.insert(value);
    out.push_back(value);
  }
  return out;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ConfigError("cannot gather an empty batch");
  const Transition& first = data_.at(indices.front());
  const auto rows = static_cast<Eigen::Index>(indices.size());
  const auto obs = static_cast<Eigen::Index>(first.state.size());
  const auto act = static_cast<Eigen::Index>(first.action.size());
  Batch b;
  b.states.resize(rows, obs);
  b.next_states.resize(rows, obs);
  b.actions.resize(rows, act);
  b.rewards.resize(rows);
  b.dones.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Transition& t = data_.at(indices[static_cast<std::size_t>(r)]);
    for (Eigen::Index j = 0; j < obs; ++j) {
      b.states(r, j) = t.state[static_cast<std::size_t>(j)];
      b.next_states(r, j) = t.next_state[static_cast<std::size_t>(j)];
    }
    for (Eigen::Index j = 0; j < act; ++j) b.actions(r, j) = t.action[static_cast<std::size_t>(j)];
    b.rewards(r) = t.reward;
    b.dones(r) = t.done ? 1.0 : 0.0;
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  const auto idx = sample_indices(count, rng);
  return gather(idx);
}

// ---------------------------------------------------------------------------
// Policy head

PolicyHeads policy_heads(const Matrix& net_output, int action_dim) {
  if (net_output.cols() != 2 * action_dim) throw ShapeError("policy output must be 2 x action_dim wide");
  PolicyHeads h;
  h.mean = net_output.leftCols(action_dim);
  const Matrix raw = net_output.rightCols(action_dim);
  h.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  h.log_std_pass = ((raw.array() >= kLogStdMin) && (raw.array() <= kLogStdMax)).cast<double>();
  return h;
}

SquashedSample squash(const PolicyHeads& heads, const Matrix& noise) {
  if (noise.rows() != heads.mean.rows() || noise.cols() != heads.mean.cols()) {
    throw ShapeError("policy noise shape does not match the action batch");
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  SquashedSample s;
  s.pre_squash = heads.mean.array() + heads.log_std.array().exp() * noise.array();
  s.actions = s.pre_squash.array().tanh();
  s.log_prob = Vector::Zero(noise.rows());
  for (Eigen::Index b = 0; b < noise.rows(); ++b) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < noise.cols(); ++i) {
      const double u = s.pre_squash(b, i);
      // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
      const double log_jacobian = 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
      lp += -0.5 * noise(b, i) * noise(b, i) - heads.log_std(b, i) - half_log_2pi - log_jacobian;
    }
    s.log_prob(b) = lp;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Losses

namespace losses {

double q_loss(const nn::Mlp& q, const Matrix& states, const Matrix& actions, const Vector& targets,
              Vector* grad) {
  nn::Mlp::Cache cache;
  const Matrix out = q.forward(concat_columns(states, actions), cache);
  const Vector diff = out.col(0) - targets;
  const double n = static_cast<double>(diff.size());
  if (grad) {
    Matrix upstream = (2.0 / n) * diff;
    *grad = q.backward(cache, upstream);
  }
  return diff.squaredNorm() / n;
}

PolicyLoss policy_loss(const nn::Mlp& policy, const nn::Mlp& q1, const nn::Mlp& q2, double alpha,
                       const Matrix& states, const Matrix& noise) {
  const int act = static_cast<int>(noise.cols());
  const Eigen::Index batch = states.rows();
  const double inv_b = 1.0 / static_cast<double>(batch);

  nn::Mlp::Cache policy_cache;
  const PolicyHeads heads = policy_heads(policy.forward(states, policy_cache), act);
  const SquashedSample sample = squash(heads, noise);

  const Matrix sa = concat_columns(states, sample.actions);
  nn::Mlp::Cache c1;
  nn::Mlp::Cache c2;
  const Matrix v1 = q1.forward(sa, c1);
  const Matrix v2 = q2.forward(sa, c2);

  // Route the -min(Q1, Q2) / B upstream to whichever critic is smaller.
  Matrix up1 = Matrix::Zero(batch, 1);
  Matrix up2 = Matrix::Zero(batch, 1);
  double min_q_sum = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (v1(b, 0) <= v2(b, 0)) {
      up1(b, 0) = -inv_b;
      min_q_sum += v1(b, 0);
    } else {
      up2(b, 0) = -inv_b;
      min_q_sum += v2(b, 0);
    }
  }
  Matrix dx1;
  Matrix dx2;
  q1.backward(c1, up1, &dx1);
  q2.backward(c2, up2, &dx2);
  const Matrix d_action = (dx1 + dx2).rightCols(act);

  const Eigen::ArrayXXd a = sample.actions.array();
  const Eigen::ArrayXXd std_dev = heads.log_std.array().exp();
  const Eigen::ArrayXXd eps = noise.array();
  const Eigen::ArrayXXd d_pre = d_action.array() * (1.0 - a.square());

  Matrix upstream(batch, 2 * act);
  upstream.leftCols(act) = (alpha * inv_b * 2.0 * a + d_pre).matrix();
  upstream.rightCols(act) =
      ((alpha * inv_b * (-1.0 + 2.0 * a * std_dev * eps) + d_pre * std_dev * eps) *
       heads.log_std_pass.array())
          .matrix();

  PolicyLoss out;
  out.log_prob = sample.log_prob;
  out.loss = (alpha * sample.log_prob.sum() - min_q_sum) * inv_b;
  out.grad = policy.backward(policy_cache, upstream);
  return out;
}

double temperature_loss(double log_alpha, const Vector& log_prob, double target_entropy, double* grad) {
  const double mean_term = (log_prob.array() + target_entropy).mean();
  if (grad) *grad = -mean_term;
  return -log_alpha * mean_term;
}

Vector soft_targets(const nn::Mlp& policy, const nn::Mlp& target1, const nn::Mlp& target2,
                    double alpha, double gamma, const Batch& batch, const Matrix& noise) {
  const int act = static_cast<int>(noise.cols());
  const PolicyHeads heads = policy_heads(policy.forward(batch.next_states), act);
  const SquashedSample next = squash(heads, noise);
  const Matrix sa = concat_columns(batch.next_states, next.actions);
  const Vector q = target1.forward(sa).col(0).cwiseMin(target2.forward(sa).col(0));
  const Vector soft = q - alpha * next.log_prob;
  return batch.rewards.array() + gamma * (1.0 - batch.dones.array()) * soft.array();
}

}  // namespace losses

// ---------------------------------------------------------------------------
// Agent

nlohmann::json SacConfig::to_json() const {
  nlohmann::json doc = {{"hidden", hidden},
                        {"lr", lr},
                        {"gamma", gamma},
                        {"tau", tau},
                        {"buffer_capacity", buffer_capacity},
                        {"initial_temperature", initial_temperature},
                        {"seed", seed}};
  if (target_entropy) doc["target_entropy"] = *target_entropy;
  return doc;
}

SacConfig SacConfig::from_json(const nlohmann::json& doc) {
  SacConfig c;
  c.hidden = doc.value("hidden", c.hidden);
  c.lr = doc.value("lr", c.lr);
  c.gamma = doc.value("gamma", c.gamma);
  c.tau = doc.value("tau", c.tau);
  c.buffer_capacity = doc.value("buffer_capacity", c.buffer_capacity);
  c.initial_temperature = doc.value("initial_temperature", c.initial_temperature);
  c.seed = doc.value("seed", c.seed);
  if (doc.contains("target_entropy")) c.target_entropy = doc.at("target_entropy").get<double>();
  return c;
}

SacAgent::SacAgent(int observation_dim, int action_dim, SacConfig config)
    : observation_dim_(observation_dim),
      action_dim_(action_dim),
      config_(std::move(config)),
      rng_(config_.seed),
      policy_(with_ends(observation_dim, config_.hidden, 2 * action_dim)),
      q1_(with_ends(observation_dim + action_dim, config_.hidden, 1)),
      q2_(with_ends(observation_dim + action_dim, config_.hidden, 1)) {
  if (!(config_.lr > 0) || !(config_.gamma >= 0 && config_.gamma <= 1) ||
      !(config_.tau >= 0 && config_.tau <= 1) || !(config_.initial_temperature > 0)) {
    throw ConfigError("SAC config needs lr > 0, gamma and tau in [0, 1], temperature > 0");
  }
  policy_.init(rng_);
  q1_.init(rng_);
  q2_.init(rng_);
  target1_ = q1_;
  target2_ = q2_;
  policy_opt_ = nn::Adam(policy_.param_count(), config_.lr);
  q1_opt_ = nn::Adam(q1_.param_count(), config_.lr);
  q2_opt_ = nn::Adam(q2_.param_count(), config_.lr);
  alpha_opt_ = nn::Adam(1, config_.lr);
  log_alpha_ = std::log(config_.initial_temperature);
  target_entropy_ = config_.target_entropy.value_or(-static_cast<double>(action_dim));
}

Matrix SacAgent::gaussian_noise(Eigen::Index rows) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, action_dim_);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng_);
  return m;
}

ActionSample SacAgent::sample_action(std::span<const double> state, bool deterministic) {
  if (static_cast<int>(state.size()) != observation_dim_) {
    throw ShapeError("agent expects observations of length " + std::to_string(observation_dim_));
  }
  const PolicyHeads heads = policy_heads(policy_.forward(row_matrix(state)), action_dim_);
  const Matrix noise = deterministic ? Matrix::Zero(1, action_dim_) : gaussian_noise(1);
  const SquashedSample s = squash(heads, noise);
  ActionSample out;
  out.action.assign(s.actions.data(), s.actions.data() + action_dim_);
  out.pre_squash.assign(s.pre_squash.data(), s.pre_squash.data() + action_dim_);
  out.log_prob = s.log_prob(0);
  return out;
}

std::vector<double> SacAgent::random_action() {
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(action_dim_));
  for (double& v : a) v = uniform(rng_);
  return a;
}

SacLosses SacAgent::update(const Batch& batch) {
  if (batch.size() < 1) throw ConfigError("SAC update needs a non-empty batch");
  SacLosses out;
  const double alpha = temperature();
  out.alpha = alpha;

  const Vector targets = losses::soft_targets(policy_, target1_, target2_, alpha, config_.gamma,
                                              batch, gaussian_noise(batch.size()));
  Vector grad;
  out.q1 = losses::q_loss(q1_, batch.states, batch.actions, targets, &grad);
  require_finite(out.q1, "critic", out);
  q1_opt_.step(q1_.params(), grad);
  out.q2 = losses::q_loss(q2_, batch.states, batch.actions, targets, &grad);
  require_finite(out.q2, "critic", out);
  q2_opt_.step(q2_.params(), grad);

  const losses::PolicyLoss pl =
      losses::policy_loss(policy_, q1_, q2_, alpha, batch.states, gaussian_noise(batch.size()));
  out.policy = pl.loss;
  require_finite(out.policy, "policy", out);
  policy_opt_.step(policy_.params(), pl.grad);

  double alpha_grad = 0.0;
  out.temperature = losses::temperature_loss(log_alpha_, pl.log_prob, target_entropy_, &alpha_grad);
  require_finite(out.temperature, "temperature", out);
  Vector log_alpha = Vector::Constant(1, log_alpha_);
  alpha_opt_.step(log_alpha, Vector::Constant(1, alpha_grad));
  log_alpha_ = log_alpha(0);

  nn::polyak_update(target1_, q1_, config_.tau);
  nn::polyak_update(target2_, q2_, config_.tau);
  return out;
}

std::string SacAgent::config_fingerprint() const {
  std::ostringstream s;
  s << observation_dim_ << '/' << action_dim_ << '/' << config_.to_json().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json SacAgent::checkpoint() const {
  return {{"config_fingerprint", config_fingerprint()},
          {"observation_dim", observation_dim_},
          {"action_dim", action_dim_},
          {"config", config_.to_json()},
          {"log_temperature", log_alpha_},
          {"policy", policy_.to_json()},
          {"q1", q1_.to_json()},
          {"q2", q2_.to_json()},
          {"target1", target1_.to_json()},
          {"target2", target2_.to_json()}};
}

SacAgent SacAgent::from_checkpoint(const nlohmann::json& doc) {
  SacAgent agent(doc.at("observation_dim").get<int>(), doc.at("action_dim").get<int>(),
                 SacConfig::from_json(doc.at("config")));
  if (agent.config_fingerprint() != doc.at("config_fingerprint").get<std::string>()) {
    throw ValidationError("agent checkpoint fingerprint does not match its config");
  }
  agent.policy_ = nn::Mlp::from_json(doc.at("policy"));
  agent.q1_ = nn::Mlp::from_json(doc.at("q1"));
  agent.q2_ = nn::Mlp::from_json(doc.at("q2"));
  agent.target1_ = nn::Mlp::from_json(doc.at("target1"));
  agent.target2_ = nn::Mlp::from_json(doc.at("target2"));
  agent.log_alpha_ = doc.at("log_temperature").get<double>();
  return agent;
}

// ---------------------------------------------------------------------------
// Training loop

nlohmann::json TrainConfig::to_json() const {
  return {{"episodes", episodes},
          {"warmup_steps", warmup_steps},
          {"batch_size", batch_size},
          {"updates_per_step", updates_per_step},
          {"reward_window", reward_window}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  c.episodes = doc.value("episodes", c.episodes);
  c.warmup_steps = doc.value("warmup_steps", c.warmup_steps);
  c.batch_size = doc.value("batch_size", c.batch_size);
  c.updates_per_step = doc.value("updates_per_step", c.updates_per_step);
  c.reward_window = doc.value("reward_window", c.reward_window);
  return c;
}

void TrainingTrace::write_csv(std::ostream& out) const {
  out << "step,episode_reward_mean,entropy_coefficient\n";
  char line[128];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%ld,%.6g,%.6g\n", r.step, r.episode_reward_mean,
                  r.entropy_coefficient);
    out << line;
  }
}

TrainingTrace TrainingTrace::read_csv(std::istream& in) {
  TrainingTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,episode_reward_mean,entropy_coefficient", 0) != 0) {
    throw ParseError("trace CSV must start with step,episode_reward_mean,entropy_coefficient", 0, -1);
  }
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    TraceRow r;
    char comma1 = 0;
    char comma2 = 0;
    std::istringstream cells(line);
    if (!(cells >> r.step >> comma1 >> r.episode_reward_mean >> comma2 >> r.entropy_coefficient) ||
        comma1 != ',' || comma2 != ',') {
      throw ParseError("bad trace CSV row " + std::to_string(row), row, -1);
    }
    r.episode = static_cast<int>(row - 1);
    trace.rows.push_back(r);
  }
  return trace;
}

TrainingTrace train(SacAgent& agent, Environment& env, const TrainConfig& config) {
  if (env.observation_dim() != agent.observation_dim() || env.action_dim() != agent.action_dim()) {
    throw ConfigError("agent and environment dimensions differ");
  }
  if (config.episodes < 0 || config.warmup_steps < 0 || config.batch_size <= 0 ||
      config.updates_per_step < 0 || config.reward_window <= 0) {
    throw ConfigError("invalid training config");
  }
  ReplayBuffer buffer(agent.config().buffer_capacity);
  TrainingTrace trace;
  std::deque<double> window;
  double window_sum = 0.0;

  for (int episode = 0; episode < config.episodes; ++episode) {
    std::vector<double> obs = env.reset();
    double episode_return = 0.0;
    int length = 0;
    while (true) {
      const std::vector<double> action = trace.total_steps < config.warmup_steps
                                             ? agent.random_action()
                                             : agent.sample_action(obs, false).action;
      EnvStep step = env.step(action);
      ++trace.total_steps;
      ++length;
      episode_return += step.reward;
      buffer.add(Transition{obs, action, step.reward, step.observation, step.terminal});
      obs = std::move(step.observation);
      if (trace.total_steps > config.warmup_steps) {
        for (int u = 0; u < config.updates_per_step; ++u) {
          agent.update(buffer.sample(static_cast<std::size_t>(config.batch_size), agent.rng()));
          ++trace.updates;
        }
      }
      if (step.terminal || step.truncated) break;
    }
    window.push_back(episode_return);
    window_sum += episode_return;
    if (static_cast<int>(window.size()) > config.reward_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    trace.rows.push_back(TraceRow{trace.total_steps, episode, episode_return, length,
                                  window_sum / static_cast<double>(window.size()),
                                  agent.temperature()});
  }
  trace.buffer_size = buffer.size();
  return trace;
}

}  // namespace faircf::sac

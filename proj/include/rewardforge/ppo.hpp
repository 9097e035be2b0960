#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rewardforge/dsl.hpp"
#include "rewardforge/env.hpp"
#include "rewardforge/mlp.hpp"
#include "rewardforge/rng.hpp"

namespace rewardforge::ppo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct PpoConfig {
  int rollout_steps = 8;
  int minibatch_size = 256;
  int mini_epochs = 5;
  double discount = 0.99;
  double gae_tau = 0.95;
  double clip_epsilon = 0.2;
  double kl_threshold = 0.02;
  double grad_norm_max = 1.0;
  double learning_rate = 5e-3;  // adaptive: halves above the KL threshold
  double entropy_coef = 0.0;
  std::vector<int> hidden = {64, 64};
  long total_steps = 2000000;
  int checkpoint_count = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (discount <= 0.0 || discount > 1.0)
      throw std::invalid_argument("discount must be in (0, 1]");
    if (gae_tau < 0.0 || gae_tau > 1.0)
      throw std::invalid_argument("gae_tau must be in [0, 1]");
    if (clip_epsilon <= 0.0)
      throw std::invalid_argument("clip_epsilon must be positive");
    if (checkpoint_count < 2)
      throw std::invalid_argument("checkpoint_count must be >= 2");
    if (rollout_steps < 1 || minibatch_size < 1 || mini_epochs < 1)
      throw std::invalid_argument("rollout/minibatch/epochs must be >= 1");
    if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
  }
};

// Teacher policy observation: a fixed 18-dim slice of the live roster.
constexpr int kPolicyObsDim = 18;

inline void policy_input_row(const ObsBatch& obs, int env, double* out) {
  int k = 0;
  for (int c = 0; c < 3; ++c) out[k++] = 20.0 * obs.at("active_pos", env, c);
  for (int c = 0; c < 4; ++c) out[k++] = obs.at("active_quat", env, c);
  for (int c = 0; c < 3; ++c) out[k++] = 0.5 * obs.at("obj_base_angvel", env, c);
  for (int c = 0; c < 3; ++c) out[k++] = obs.at("pivot_axel_worldframe", env, c);
  for (int c = 0; c < 4; ++c) out[k++] = obs.at("tip_object_contacts", env, c);
  out[k++] = obs.at("n_tip_contacts", env) / 4.0;
}

inline MatrixXd policy_input(const ObsBatch& obs) {
  MatrixXd x(obs.num_envs(), kPolicyObsDim);
  std::vector<double> row(kPolicyObsDim);
  for (int env = 0; env < obs.num_envs(); ++env) {
    policy_input_row(obs, env, row.data());
    for (int c = 0; c < kPolicyObsDim; ++c) x(env, c) = row[c];
  }
  return x;
}

// Diagonal-Gaussian actor-critic with a state-independent log-std.
struct GaussianPolicy {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Tensor log_std;
  int obs_dim = 0;
  int act_dim = 0;

  static GaussianPolicy make(int obs_dim, int act_dim,
                             const std::vector<int>& hidden, Rng& rng) {
    GaussianPolicy p;
    p.obs_dim = obs_dim;
    p.act_dim = act_dim;
    p.actor = nn::Mlp(obs_dim, hidden, act_dim, rng);
    p.critic = nn::Mlp(obs_dim, hidden, 1, rng);
    p.log_std.init(act_dim, 1);
    p.log_std.value.setConstant(-0.5);
    return p;
  }

  void for_each_param(const std::function<void(nn::Tensor&)>& fn) {
    actor.for_each_param(fn);
    critic.for_each_param(fn);
    fn(log_std);
  }

  VectorXd log_prob(const MatrixXd& mean, const MatrixXd& actions) const {
    const int n = static_cast<int>(mean.rows());
    VectorXd out(n);
    for (int i = 0; i < n; ++i) {
      double lp = -0.5 * act_dim * std::log(2.0 * M_PI);
      for (int k = 0; k < act_dim; ++k) {
        const double ls = log_std.value(k, 0);
        const double z = (actions(i, k) - mean(i, k)) * std::exp(-ls);
        lp += -0.5 * z * z - ls;
      }
      out(i) = lp;
    }
    return out;
  }

  double entropy() const {
    double h = 0.0;
    for (int k = 0; k < act_dim; ++k)
      h += log_std.value(k, 0) + 0.5 * (1.0 + std::log(2.0 * M_PI));
    return h;
  }

  struct ActResult {
    MatrixXd actions;  // raw samples (the env clamps)
    VectorXd log_prob;
    VectorXd value;
  };

  ActResult act(const MatrixXd& obs, Rng& rng) const {
    ActResult r;
    const MatrixXd mean = actor.forward(obs);
    r.actions = mean;
    for (int i = 0; i < mean.rows(); ++i)
      for (int k = 0; k < act_dim; ++k)
        r.actions(i, k) += std::exp(log_std.value(k, 0)) * rng.normal();
    r.log_prob = log_prob(mean, r.actions);
    r.value = critic.forward(obs).col(0);
    return r;
  }

  MatrixXd mean_action(const MatrixXd& obs) const { return actor.forward(obs); }
};

// ---------------------------------------------------------------------------
// Trajectory storage and GAE

struct TrajectoryBuffer {
  int steps = 0;
  int num_envs = 0;
  MatrixXd obs;       // [T*N, obs_dim]
  MatrixXd actions;   // [T*N, act_dim]
  VectorXd log_prob;  // [T*N]
  VectorXd value;     // [T*N]
  VectorXd reward;    // [T*N]
  std::vector<std::uint8_t> done;  // [T*N], transition ended its episode
  VectorXd bootstrap_value;        // [N]

  int size() const { return steps * num_envs; }
  int index(int t, int env) const { return t * num_envs + env; }
};

struct GaeResult {
  VectorXd advantages;
  VectorXd returns;
};

// Masked generalized advantage estimation over the rollout buffer.
inline GaeResult compute_gae(const TrajectoryBuffer& buffer, double discount,
                             double tau) {
  const int T = buffer.steps;
  const int N = buffer.num_envs;
  GaeResult out;
  out.advantages = VectorXd::Zero(T * N);
  out.returns = VectorXd::Zero(T * N);
  for (int env = 0; env < N; ++env) {
    double carry = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const int idx = buffer.index(t, env);
      const double nonterminal = buffer.done[idx] ? 0.0 : 1.0;
      const double next_value =
          t + 1 < T ? buffer.value(buffer.index(t + 1, env))
                    : buffer.bootstrap_value(env);
      const double delta = buffer.reward(idx) +
                           discount * nonterminal * next_value -
                           buffer.value(idx);
      carry = delta + discount * tau * nonterminal * carry;
      out.advantages(idx) = carry;
      out.returns(idx) = carry + buffer.value(idx);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clipped-surrogate loss (shared by the optimizer and the gradient tests)

struct LossBatch {
  MatrixXd obs;
  MatrixXd actions;
  VectorXd old_log_prob;
  VectorXd advantages;  // pre-normalized by the caller
  VectorXd returns;
};

struct LossStats {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

inline LossStats ppo_loss(GaussianPolicy& policy, const LossBatch& batch,
                          const PpoConfig& cfg, bool with_grad) {
  const int n = static_cast<int>(batch.obs.rows());
  const int A = policy.act_dim;
  const MatrixXd mean = with_grad ? policy.actor.forward_train(batch.obs)
                                  : policy.actor.forward(batch.obs);
  const MatrixXd values = with_grad ? policy.critic.forward_train(batch.obs)
                                    : policy.critic.forward(batch.obs);

  MatrixXd z(n, A);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < A; ++k)
      z(i, k) = (batch.actions(i, k) - mean(i, k)) *
                std::exp(-policy.log_std.value(k, 0));

  VectorXd new_log_prob(n);
  for (int i = 0; i < n; ++i) {
    double lp = -0.5 * A * std::log(2.0 * M_PI);
    for (int k = 0; k < A; ++k)
      lp += -0.5 * z(i, k) * z(i, k) - policy.log_std.value(k, 0);
    new_log_prob(i) = lp;
  }

  LossStats stats;
  VectorXd dloss_dlogp = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double log_ratio = new_log_prob(i) - batch.old_log_prob(i);
    const double ratio = std::exp(log_ratio);
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    const double adv = batch.advantages(i);
    const double pg1 = -adv * ratio;
    const double pg2 = -adv * clipped;
    stats.policy_loss += std::max(pg1, pg2) / n;
    if (pg1 >= pg2) dloss_dlogp(i) = -adv * ratio / n;
    stats.approx_kl += ((ratio - 1.0) - log_ratio) / n;
    if (std::abs(ratio - 1.0) > cfg.clip_epsilon) stats.clip_fraction += 1.0 / n;
  }

  const VectorXd vdiff = values.col(0) - batch.returns;
  stats.value_loss = vdiff.squaredNorm() / n;
  stats.entropy = policy.entropy();
  stats.total = stats.policy_loss + 0.5 * stats.value_loss -
                cfg.entropy_coef * stats.entropy;

  if (with_grad) {
    MatrixXd dmean(n, A);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < A; ++k)
        dmean(i, k) =
            dloss_dlogp(i) * z(i, k) * std::exp(-policy.log_std.value(k, 0));
    policy.actor.backward(dmean);

    MatrixXd dvalue = (vdiff / n).matrix();
    policy.critic.backward(dvalue);

    for (int k = 0; k < A; ++k) {
      double g = 0.0;
      for (int i = 0; i < n; ++i)
        g += dloss_dlogp(i) * (z(i, k) * z(i, k) - 1.0);
      g -= cfg.entropy_coef;  // d entropy / d log_std = 1 per dim
      policy.log_std.grad(k, 0) += g;
    }
  }
  return stats;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double learning_rate = 0.0;
};

class PpoUpdater {
 public:
  explicit PpoUpdater(double init_lr) : lr_(init_lr) {}

  double learning_rate() const { return lr_; }

  UpdateStats update(GaussianPolicy& policy, const TrajectoryBuffer& buffer,
                     const GaeResult& gae, const PpoConfig& cfg, Rng& rng) {
    const int batch = buffer.size();

    // Advantage normalization happens once per update over the whole batch.
    VectorXd adv = gae.advantages;
    const double mean = adv.mean();
    adv.array() -= mean;
    const double stddev = std::sqrt(adv.squaredNorm() / batch);
    adv /= (stddev + 1e-8);

    std::vector<int> order(batch);
    std::iota(order.begin(), order.end(), 0);

    UpdateStats stats;
    int updates = 0;
    for (int epoch = 0; epoch < cfg.mini_epochs; ++epoch) {
      // Fisher-Yates with the trainer stream keeps runs reproducible.
      for (int i = batch - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_index(i + 1));
        std::swap(order[i], order[j]);
      }
      for (int start = 0; start < batch; start += cfg.minibatch_size) {
        const int count = std::min(cfg.minibatch_size, batch - start);
        LossBatch mb;
        mb.obs.resize(count, buffer.obs.cols());
        mb.actions.resize(count, buffer.actions.cols());
        mb.old_log_prob.resize(count);
        mb.advantages.resize(count);
        mb.returns.resize(count);
        for (int i = 0; i < count; ++i) {
          const int src = order[start + i];
          mb.obs.row(i) = buffer.obs.row(src);
          mb.actions.row(i) = buffer.actions.row(src);
          mb.old_log_prob(i) = buffer.log_prob(src);
          mb.advantages(i) = adv(src);
          mb.returns(i) = gae.returns(src);
        }
        const LossStats ls = ppo_loss(policy, mb, cfg, /*with_grad=*/true);
        if (!std::isfinite(ls.total))
          throw std::runtime_error("ppo_update: non-finite loss");
        clip_gradients(policy, cfg.grad_norm_max);
        adam_.step(lr_, [&](const std::function<void(nn::Tensor&)>& fn) {
          policy.for_each_param(fn);
        });
        for (int k = 0; k < policy.act_dim; ++k)
          policy.log_std.value(k, 0) =
              std::clamp(policy.log_std.value(k, 0), -4.0, 1.5);

        stats.policy_loss += ls.policy_loss;
        stats.value_loss += ls.value_loss;
        stats.approx_kl += ls.approx_kl;
        stats.clip_fraction += ls.clip_fraction;
        ++updates;
      }
    }
    if (updates > 0) {
      stats.policy_loss /= updates;
      stats.value_loss /= updates;
      stats.approx_kl /= updates;
      stats.clip_fraction /= updates;
    }

    // KL-driven learning-rate adaptation, bounded to [1e-6, 1e-2].
    if (stats.approx_kl > cfg.kl_threshold)
      lr_ *= 0.5;
    else if (stats.approx_kl < 0.5 * cfg.kl_threshold)
      lr_ *= 1.5;
    lr_ = std::clamp(lr_, 1e-6, 1e-2);
    stats.learning_rate = lr_;
    return stats;
  }

 private:
  static void clip_gradients(GaussianPolicy& policy, double max_norm) {
    double sq = 0.0;
    policy.for_each_param([&](nn::Tensor& p) { sq += p.grad.squaredNorm(); });
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
      const double scale = max_norm / norm;
      policy.for_each_param([&](nn::Tensor& p) { p.grad *= scale; });
    }
  }

  nn::Adam adam_;
  double lr_;
};

// ---------------------------------------------------------------------------
// Training

struct ComponentStats {
  std::vector<double> series;  // value at each checkpoint
  double max = 0.0;
  double mean = 0.0;
  double min = 0.0;
};

struct TrainResult {
  std::vector<double> task_score;  // checkpoint series, includes step 0
  std::vector<std::pair<std::string, ComponentStats>> components;
  long total_env_steps = 0;
  double wall_time_s = 0.0;  // in-memory only; never persisted
  bool faulted = false;
  std::string fault_message;
};

struct RolloutOutcome {
  TrajectoryBuffer buffer;
  std::vector<double> component_means;  // aligned with program components
};

inline RolloutOutcome collect_rollout(const GaussianPolicy& policy,
                                      env::RotationEnv& rotation_env,
                                      const dsl::RewardProgram& program,
                                      int steps, ObsBatch& current_obs,
                                      Rng& rng) {
  const int n = rotation_env.config().num_envs;
  RolloutOutcome out;
  TrajectoryBuffer& buf = out.buffer;
  buf.steps = steps;
  buf.num_envs = n;
  buf.obs.resize(steps * n, policy.obs_dim);
  buf.actions.resize(steps * n, policy.act_dim);
  buf.log_prob.resize(steps * n);
  buf.value.resize(steps * n);
  buf.reward.resize(steps * n);
  buf.done.assign(static_cast<std::size_t>(steps) * n, 0);

  const std::size_t n_components = program.component_indices.size();
  out.component_means.assign(n_components, 0.0);

  std::vector<double> env_actions(static_cast<std::size_t>(n) * env::kActionDim);
  for (int t = 0; t < steps; ++t) {
    const MatrixXd x = policy_input(current_obs);
    const auto act = policy.act(x, rng);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < env::kActionDim; ++k)
        env_actions[i * env::kActionDim + k] =
            std::clamp(act.actions(i, k), -1.0, 1.0);

    const auto step = rotation_env.step(env_actions);
    const auto reward = dsl::evaluate(program, step.obs);

    for (int i = 0; i < n; ++i) {
      const int idx = buf.index(t, i);
      buf.obs.row(idx) = x.row(i);
      buf.actions.row(idx) = act.actions.row(i);
      buf.log_prob(idx) = act.log_prob(i);
      buf.value(idx) = act.value(i);
      buf.reward(idx) = reward.total[i];
      buf.done[idx] = step.resets[i];
    }
    for (std::size_t c = 0; c < n_components; ++c) {
      const auto& vals = reward.components[c].second;
      double acc = 0.0;
      for (double v : vals) acc += v;
      out.component_means[c] += acc / (static_cast<double>(n) * steps);
    }
    current_obs = rotation_env.observe();
  }

  const MatrixXd x = policy_input(current_obs);
  buf.bootstrap_value = const_cast<GaussianPolicy&>(policy).critic.forward(x).col(0);
  return out;
}

inline std::pair<GaussianPolicy, TrainResult> train(
    const dsl::RewardProgram& program, env::EnvConfig env_cfg, PpoConfig cfg) {
  cfg.validate();
  env_cfg.validate();
  dsl::check(program);

  const auto t_start = std::chrono::steady_clock::now();
  Rng rng = Rng::child(cfg.seed, 0x7261696e, 0);
  env::RotationEnv rotation_env(env_cfg);
  GaussianPolicy policy =
      GaussianPolicy::make(kPolicyObsDim, env::kActionDim, cfg.hidden, rng);
  PpoUpdater updater(cfg.learning_rate);

  TrainResult result;
  const std::size_t n_components = program.component_indices.size();
  std::vector<std::string> component_names;
  for (int idx : program.component_indices)
    component_names.push_back(program.bindings[idx].name);

  // Running history of rollout-mean values per component.
  std::vector<std::vector<double>> history(n_components);
  std::vector<double> since_checkpoint_sum(n_components, 0.0);
  int since_checkpoint_count = 0;

  ObsBatch current_obs = rotation_env.reset_all();

  // Step-0 checkpoint: component values on the initial observations.
  {
    const auto initial = dsl::evaluate(program, current_obs);
    result.task_score.push_back(rotation_env.consecutive_successes());
    for (std::size_t c = 0; c < n_components; ++c) {
      const auto& vals = initial.components[c].second;
      double acc = 0.0;
      for (double v : vals) acc += v;
      history[c].push_back(acc / vals.size());
    }
  }
  std::vector<double> last_checkpoint_value(n_components);
  for (std::size_t c = 0; c < n_components; ++c)
    last_checkpoint_value[c] = history[c][0];
  std::vector<std::vector<double>> series(n_components);
  for (std::size_t c = 0; c < n_components; ++c)
    series[c].push_back(history[c][0]);

  const long steps_per_iter =
      static_cast<long>(env_cfg.num_envs) * cfg.rollout_steps;
  const long iterations = cfg.total_steps / steps_per_iter;

  int next_checkpoint = 1;
  auto checkpoint_iter = [&](int j) {
    return static_cast<long>(
        std::llround(static_cast<double>(j) * iterations / cfg.checkpoint_count));
  };

  for (long it = 1; it <= iterations; ++it) {
    try {
      RolloutOutcome rollout = collect_rollout(policy, rotation_env, program,
                                               cfg.rollout_steps, current_obs, rng);
      for (std::size_t c = 0; c < n_components; ++c) {
        history[c].push_back(rollout.component_means[c]);
        since_checkpoint_sum[c] += rollout.component_means[c];
      }
      ++since_checkpoint_count;

      const GaeResult gae = compute_gae(rollout.buffer, cfg.discount, cfg.gae_tau);
      updater.update(policy, rollout.buffer, gae, cfg, rng);
      result.total_env_steps += steps_per_iter;
    } catch (const dsl::EvalFault& fault) {
      result.faulted = true;
      result.fault_message = fault.what();
      break;
    } catch (const std::runtime_error& err) {
      result.faulted = true;
      result.fault_message = err.what();
      break;
    }

    while (next_checkpoint <= cfg.checkpoint_count &&
           checkpoint_iter(next_checkpoint) == it) {
      result.task_score.push_back(rotation_env.consecutive_successes());
      for (std::size_t c = 0; c < n_components; ++c) {
        const double value = since_checkpoint_count > 0
                                 ? since_checkpoint_sum[c] / since_checkpoint_count
                                 : last_checkpoint_value[c];
        series[c].push_back(value);
        last_checkpoint_value[c] = value;
      }
      std::fill(since_checkpoint_sum.begin(), since_checkpoint_sum.end(), 0.0);
      since_checkpoint_count = 0;
      ++next_checkpoint;
    }
  }

  for (std::size_t c = 0; c < n_components; ++c) {
    ComponentStats stats;
    stats.series = series[c];
    stats.max = *std::max_element(history[c].begin(), history[c].end());
    stats.min = *std::min_element(history[c].begin(), history[c].end());
    stats.mean = std::accumulate(history[c].begin(), history[c].end(), 0.0) /
                 history[c].size();
    result.components.emplace_back(component_names[c], stats);
  }

  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return {std::move(policy), std::move(result)};
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  double rots_per_ep = 0.0;        // full turns, delta/(2 pi)
  double rots_per_ep_half = 0.0;   // the /3.14 counting convention
  double ep_len_seconds = 0.0;
  double task_score = 0.0;
  std::vector<env::EpisodeRecord> episodes;
};

inline EvalReport evaluate_policy(const GaussianPolicy& policy,
                                  env::EnvConfig env_cfg, int episodes) {
  env_cfg.validate();
  env::RotationEnv rotation_env(env_cfg);
  const int n = env_cfg.num_envs;

  EvalReport report;
  std::vector<double> env_actions(static_cast<std::size_t>(n) * env::kActionDim);
  ObsBatch obs = rotation_env.observe();
  const long max_steps =
      static_cast<long>(env_cfg.max_episode_steps) * (episodes + n) ;
  for (long t = 0; t < max_steps &&
                   static_cast<int>(report.episodes.size()) < episodes;
       ++t) {
    const MatrixXd mean = policy.mean_action(policy_input(obs));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < env::kActionDim; ++k)
        env_actions[i * env::kActionDim + k] = std::clamp(mean(i, k), -1.0, 1.0);
    const auto step = rotation_env.step(env_actions);
    for (const auto& rec : step.metrics.finished) {
      if (static_cast<int>(report.episodes.size()) < episodes)
        report.episodes.push_back(rec);
    }
    obs = rotation_env.observe();
  }

  if (!report.episodes.empty()) {
    double rots = 0.0, len = 0.0;
    for (const auto& rec : report.episodes) {
      rots += std::abs(rec.rotations);
      len += rec.steps * env_cfg.dt;
    }
    report.rots_per_ep = rots / report.episodes.size();
    report.rots_per_ep_half = report.rots_per_ep * (2.0 * M_PI) / 3.14;
    report.ep_len_seconds = len / report.episodes.size();
  }
  report.task_score = rotation_env.consecutive_successes();
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoint files: versioned JSON with a dims header.

inline nlohmann::json mlp_to_json(const nn::Mlp& mlp) {
  nlohmann::json layers = nlohmann::json::array();
  const_cast<nn::Mlp&>(mlp).for_each_param([&](nn::Tensor& p) {
    nlohmann::json mat = nlohmann::json::array();
    for (int i = 0; i < p.value.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < p.value.cols(); ++j) row.push_back(p.value(i, j));
      mat.push_back(std::move(row));
    }
    layers.push_back(std::move(mat));
  });
  return layers;
}

inline void mlp_from_json(const nlohmann::json& layers, nn::Mlp& mlp) {
  std::size_t cursor = 0;
  mlp.for_each_param([&](nn::Tensor& p) {
    const auto& mat = layers.at(cursor++);
    for (int i = 0; i < p.value.rows(); ++i)
      for (int j = 0; j < p.value.cols(); ++j)
        p.value(i, j) = mat.at(i).at(j).get<double>();
  });
}

inline nlohmann::json policy_to_json(const GaussianPolicy& policy,
                                     const std::string& kind,
                                     const std::vector<int>& hidden) {
  nlohmann::json j;
  j["format"] = "rewardforge-policy";
  j["version"] = 1;
  j["kind"] = kind;
  j["obs_dim"] = policy.obs_dim;
  j["act_dim"] = policy.act_dim;
  j["hidden"] = hidden;
  nlohmann::json ls = nlohmann::json::array();
  for (int k = 0; k < policy.act_dim; ++k) ls.push_back(policy.log_std.value(k, 0));
  j["log_std"] = std::move(ls);
  j["actor"] = mlp_to_json(policy.actor);
  j["critic"] = mlp_to_json(policy.critic);
  return j;
}

inline GaussianPolicy policy_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "rewardforge-policy")
    throw std::runtime_error("not a policy checkpoint file");
  const int obs_dim = j.at("obs_dim").get<int>();
  const int act_dim = j.at("act_dim").get<int>();
  const std::vector<int> hidden = j.at("hidden").get<std::vector<int>>();
  Rng rng(0);
  GaussianPolicy policy = GaussianPolicy::make(obs_dim, act_dim, hidden, rng);
  for (int k = 0; k < act_dim; ++k)
    policy.log_std.value(k, 0) = j.at("log_std").at(k).get<double>();
  mlp_from_json(j.at("actor"), policy.actor);
  mlp_from_json(j.at("critic"), policy.critic);
  return policy;
}

inline nlohmann::json train_result_to_json(const TrainResult& r) {
  nlohmann::json j;
  j["task_score"] = r.task_score;
  j["total_env_steps"] = r.total_env_steps;
  j["faulted"] = r.faulted;
  if (r.faulted) j["fault_message"] = r.fault_message;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& [name, stats] : r.components) {
    nlohmann::json c;
    c["name"] = name;
    c["series"] = stats.series;
    c["max"] = stats.max;
    c["mean"] = stats.mean;
    c["min"] = stats.min;
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  return j;
}

inline TrainResult train_result_from_json(const nlohmann::json& j) {
  TrainResult r;
  r.task_score = j.at("task_score").get<std::vector<double>>();
  r.total_env_steps = j.at("total_env_steps").get<long>();
  r.faulted = j.at("faulted").get<bool>();
  if (r.faulted) r.fault_message = j.value("fault_message", "");
  for (const auto& c : j.at("components")) {
    ComponentStats stats;
    stats.series = c.at("series").get<std::vector<double>>();
    stats.max = c.at("max").get<double>();
    stats.mean = c.at("mean").get<double>();
    stats.min = c.at("min").get<double>();
    r.components.emplace_back(c.at("name").get<std::string>(), stats);
  }
  return r;
}

}  // namespace rewardforge::ppo

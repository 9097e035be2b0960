#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rewardforge/geom.hpp"
#include "rewardforge/obs.hpp"
#include "rewardforge/rng.hpp"

namespace rewardforge::env {

using geom::UnitQuat;
using geom::Vec3;

struct EnvConfig {
  int num_envs = 64;
  double dt = 0.05;  // 20 Hz
  int max_episode_steps = 600;
  double kp_dist = 0.03;
  double success_tolerance = 0.0045;      // 0.15 * kp_dist
  double fall_reset_dist = 0.018;         // 4x success_tolerance
  double axis_deviat_reset_dist = 0.5;
  double rot_increment = 0.4;
  double reach_goal_bonus = 1.0;
  double early_reset_penalty = 1.0;
  double av_factor = 0.1;
  double torque_gain = 0.3;
  double damping = 0.85;
  double grip_gain = 0.03;
  double grip_decay = 0.005;
  double drift_gain = 0.05;
  double noise_std = 0.005;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_envs < 1) throw std::invalid_argument("num_envs must be >= 1");
    if (av_factor <= 0.0 || av_factor > 1.0)
      throw std::invalid_argument("av_factor must be in (0, 1]");
    if (rot_increment <= 0.0 || rot_increment > M_PI)
      throw std::invalid_argument("rot_increment must be in (0, pi]");
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    if (max_episode_steps < 1)
      throw std::invalid_argument("max_episode_steps must be >= 1");
    if (success_tolerance <= 0.0 || fall_reset_dist <= 0.0 || kp_dist <= 0.0)
      throw std::invalid_argument("distances must be positive");
    for (double g : {torque_gain, damping, grip_gain, grip_decay, drift_gain,
                     noise_std})
      if (!std::isfinite(g)) throw std::invalid_argument("gains must be finite");
  }
};

struct EnvState {
  UnitQuat obj_orn;
  UnitQuat goal_orn;
  UnitQuat prev_obj_orn;
  Vec3 obj_angvel;
  Vec3 obj_pos_offset;
  double grip = 1.0;
  int progress = 0;
  int successes = 0;
  double rotation_counts = 0.0;
  Vec3 pivot_axel_objframe;  // fixed per episode at reset
  double g_dir_z = 1.0;      // palm-up / palm-down analog
};

struct EpisodeRecord {
  int env = 0;
  int steps = 0;
  int successes = 0;
  double rotations = 0.0;  // full turns about the pivot, delta/(2 pi)
  bool early = false;
};

struct StepMetrics {
  double task_score = 0.0;  // running consecutive-successes blend
  std::vector<EpisodeRecord> finished;
};

struct StepResult {
  ObsBatch obs;  // pre-reset observations, reward-ready
  std::vector<std::uint8_t> resets;
  std::vector<std::uint8_t> goal_resets;
  StepMetrics metrics;
};

constexpr int kActionDim = 4;  // 3 torque + 1 grip
constexpr int kNumTips = 4;
constexpr int kNumKeypoints = 6;

// Vectorized kinematic surrogate of the subgoal-curriculum rotation task.
// One trainer owns one batch; per-env updates have no cross-env effects.
class RotationEnv {
 public:
  explicit RotationEnv(const EnvConfig& cfg)
      : cfg_(cfg),
        rng_(cfg.seed),
        basis_(geom::default_keypoint_basis()),
        states_(cfg.num_envs) {
    cfg_.validate();
    reset_all();
  }

  const EnvConfig& config() const { return cfg_; }
  const Vec3& pivot_axis() const { return pivot_axis_; }
  double consecutive_successes() const { return consecutive_successes_; }
  const EnvState& state(int env) const { return states_.at(env); }
  EnvState& mutable_state(int env) { return states_.at(env); }

  ObsBatch reset_all() {
    std::vector<int> ids(states_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    consecutive_successes_ = 0.0;
    return reset(ids);
  }

  ObsBatch reset(const std::vector<int>& env_ids) {
    reset_states(env_ids);
    return observe();
  }
  void reset_states(const std::vector<int>& env_ids) {
    for (int id : env_ids) {
      if (id < 0 || id >= static_cast<int>(states_.size()))
        throw std::out_of_range("reset: bad env id " + std::to_string(id));
      EnvState& s = states_[id];
      s.obj_orn = UnitQuat::random(rng_);
      s.goal_orn =
          geom::quat_mul(UnitQuat::from_axis_angle(pivot_axis_, cfg_.rot_increment),
                         s.obj_orn)
              .canonical();
      s.prev_obj_orn = s.obj_orn;
      s.obj_angvel = {rng_.normal(0.0, cfg_.noise_std),
                      rng_.normal(0.0, cfg_.noise_std),
                      rng_.normal(0.0, cfg_.noise_std)};
      s.obj_pos_offset = {rng_.normal(0.0, 0.01 * cfg_.noise_std),
                          rng_.normal(0.0, 0.01 * cfg_.noise_std),
                          rng_.normal(0.0, 0.01 * cfg_.noise_std)};
      s.grip = 1.0;
      s.progress = 0;
      s.successes = 0;
      s.rotation_counts = 0.0;
      s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, pivot_axis_);
      s.g_dir_z = rng_.uniform() < 0.5 ? 1.0 : -1.0;
    }
  }

  StepResult step(std::span<const double> actions) {
    const int n = static_cast<int>(states_.size());
    if (static_cast<int>(actions.size()) != n * kActionDim)
      throw std::invalid_argument("step: actions must be (num_envs, 4)");
    for (int env = 0; env < n; ++env)
      for (int k = 0; k < kActionDim; ++k)
        if (!std::isfinite(actions[env * kActionDim + k]))
          throw std::invalid_argument("step: non-finite action in env " +
                                      std::to_string(env));

    // Dynamics: 4-DoF rotor (3 torque channels + 1 grip channel).
    for (int env = 0; env < n; ++env) {
      EnvState& s = states_[env];
      const double* a = &actions[env * kActionDim];
      s.obj_angvel = s.obj_angvel * cfg_.damping +
                     Vec3{a[0], a[1], a[2]} * cfg_.torque_gain +
                     Vec3{rng_.normal(0.0, cfg_.noise_std),
                          rng_.normal(0.0, cfg_.noise_std),
                          rng_.normal(0.0, cfg_.noise_std)};
      const double angle = s.obj_angvel.norm() * cfg_.dt;
      if (angle > 0.0)
        s.obj_orn = geom::quat_mul(
                        UnitQuat::from_axis_angle(s.obj_angvel, angle), s.obj_orn)
                        .canonical();
      s.grip = std::clamp(s.grip + cfg_.grip_gain * a[3] - cfg_.grip_decay, 0.0, 1.0);
      s.obj_pos_offset +=
          Vec3{0.0, 0.0, s.g_dir_z} * (cfg_.drift_gain * (1.0 - s.grip) * cfg_.dt);
      s.obj_pos_offset += Vec3{rng_.normal(0.0, 0.001 * cfg_.noise_std),
                               rng_.normal(0.0, 0.001 * cfg_.noise_std),
                               rng_.normal(0.0, 0.001 * cfg_.noise_std)};
      s.progress += 1;
    }

    // Rotation bookkeeping uses the orientation held from the previous step.
    for (EnvState& s : states_) {
      const auto delta = geom::euler_xyz_delta(s.obj_orn, s.prev_obj_orn);
      s.rotation_counts += delta.angles.dot(pivot_axis_) / (2.0 * M_PI);
    }

    StepResult result{observe(), std::vector<std::uint8_t>(n, 0),
                      std::vector<std::uint8_t>(n, 0), {}};

    // Success, termination, and the subgoal curriculum.
    double finished_successes = 0.0;
    int num_resets = 0;
    for (int env = 0; env < n; ++env) {
      EnvState& s = states_[env];
      const double mean_kp = mean_keypoint_dist(s);
      const double axis_dev = axis_deviation_angle(s);
      const int n_tip = tip_contacts(s);
      const bool success = mean_kp <= cfg_.success_tolerance;
      const bool early = mean_kp >= cfg_.fall_reset_dist ||
                         axis_dev >= cfg_.axis_deviat_reset_dist || n_tip == 0;
      const bool reset = early || s.progress >= cfg_.max_episode_steps;
      result.goal_resets[env] = success;
      result.resets[env] = reset;

      if (success) {
        // Rotate the target onward and keep the episode running.
        s.goal_orn = geom::quat_mul(
                         UnitQuat::from_axis_angle(pivot_axis_, cfg_.rot_increment),
                         s.goal_orn)
                         .canonical();
        s.successes += 1;
      }
      if (reset) {
        ++num_resets;
        finished_successes += s.successes;
        result.metrics.finished.push_back(
            {env, s.progress, s.successes, s.rotation_counts, early});
      }
    }

    if (num_resets > 0) {
      consecutive_successes_ =
          cfg_.av_factor * finished_successes / num_resets +
          (1.0 - cfg_.av_factor) * consecutive_successes_;
    }
    result.metrics.task_score = consecutive_successes_;

    for (EnvState& s : states_) s.prev_obj_orn = s.obj_orn;

    std::vector<int> to_reset;
    for (int env = 0; env < n; ++env)
      if (result.resets[env]) to_reset.push_back(env);
    if (!to_reset.empty()) reset_states(to_reset);

    return result;
  }

  // Live roster fields from the current state; every other roster name stays
  // zero-filled.
  ObsBatch observe() const {
    const int n = static_cast<int>(states_.size());
    ObsBatch obs(n);
    for (int env = 0; env < n; ++env) {
      const EnvState& s = states_[env];

      const auto obj_kp = geom::keypoints(s.obj_pos_offset, s.obj_orn, basis_, cfg_.kp_dist);
      const auto goal_kp = geom::keypoints({0, 0, 0}, s.goal_orn, basis_, cfg_.kp_dist);
      const double mean_kp = geom::mean_keypoint_distance(obj_kp, goal_kp);
      const double axis_dev = axis_deviation_angle(s);
      const int n_tip = tip_contacts(s);
      const bool success = mean_kp <= cfg_.success_tolerance;
      const bool early = mean_kp >= cfg_.fall_reset_dist ||
                         axis_dev >= cfg_.axis_deviat_reset_dist || n_tip == 0;

      obs.at("success_bonus", env) = success ? cfg_.reach_goal_bonus : 0.0;
      obs.at("early_reset_penalty_value", env) = early ? cfg_.early_reset_penalty : 0.0;
      obs.at("kp_dist", env) = cfg_.kp_dist;
      obs.at("n_keypoints", env) = static_cast<double>(kNumKeypoints);
      obs.at("n_tips", env) = static_cast<double>(kNumTips);

      set_vec3(obs, "obj_base_pos", env, s.obj_pos_offset);
      set_vec3(obs, "goal_base_pos", env, {0, 0, 0});
      set_quat(obs, "obj_base_orn", env, s.obj_orn);
      set_quat(obs, "goal_base_orn", env, s.goal_orn);
      set_quat(obs, "prev_obj_orn", env, s.prev_obj_orn);
      set_quat(obs, "delta_obj_orn", env,
               geom::quat_mul(s.obj_orn, s.prev_obj_orn.conjugate()).canonical());
      set_vec3(obs, "obj_base_linvel", env,
               Vec3{0.0, 0.0, s.g_dir_z} * (cfg_.drift_gain * (1.0 - s.grip)));
      set_vec3(obs, "obj_base_angvel", env, s.obj_angvel);
      set_vec3(obs, "pivot_axel_worldframe", env, pivot_axis_);
      set_vec3(obs, "pivot_axel_objframe", env, s.pivot_axel_objframe);

      set_vec3(obs, "active_pos", env, s.obj_pos_offset);  // goal sits at origin
      set_quat(obs, "active_quat", env,
               geom::quat_mul(s.obj_orn, s.goal_orn.conjugate()).canonical());

      auto& obj_kp_field = obs.field("obj_kp_positions_centered");
      auto& goal_kp_field = obs.field("goal_kp_positions_centered");
      auto& active_kp_field = obs.field("active_kp");
      for (int k = 0; k < kNumKeypoints; ++k) {
        const std::size_t off = (static_cast<std::size_t>(env) * kNumKeypoints + k) * 3;
        const Vec3& o = obj_kp.points[k];
        const Vec3& g = goal_kp.points[k];
        obj_kp_field[off] = o.x;
        obj_kp_field[off + 1] = o.y;
        obj_kp_field[off + 2] = o.z;
        goal_kp_field[off] = g.x;
        goal_kp_field[off + 1] = g.y;
        goal_kp_field[off + 2] = g.z;
        active_kp_field[off] = o.x - g.x;
        active_kp_field[off + 1] = o.y - g.y;
        active_kp_field[off + 2] = o.z - g.z;
      }

      const int n_good = good_contacts(s, axis_dev);
      obs.at("n_tip_contacts", env) = n_tip;
      obs.at("n_good_contacts", env) = n_good;
      obs.at("n_non_tip_contacts", env) = std::round(2.0 * (1.0 - s.grip));
      auto& tips = obs.field("tip_object_contacts");
      for (int k = 0; k < kNumTips; ++k)
        tips[static_cast<std::size_t>(env) * kNumTips + k] = k < n_tip ? 1.0 : 0.0;
    }
    return obs;
  }

  double mean_keypoint_dist(const EnvState& s) const {
    const auto obj_kp = geom::keypoints(s.obj_pos_offset, s.obj_orn, basis_, cfg_.kp_dist);
    const auto goal_kp = geom::keypoints({0, 0, 0}, s.goal_orn, basis_, cfg_.kp_dist);
    return geom::mean_keypoint_distance(obj_kp, goal_kp);
  }

  double axis_deviation_angle(const EnvState& s) const {
    return geom::axis_deviation(pivot_axis_,
                                geom::quat_rotate(s.obj_orn, s.pivot_axel_objframe));
  }

  int tip_contacts(const EnvState& s) const {
    return static_cast<int>(std::round(kNumTips * s.grip));
  }

  int good_contacts(const EnvState& s, double axis_dev) const {
    const double alignment = std::clamp(std::cos(axis_dev), 0.0, 1.0);
    return static_cast<int>(std::round(kNumTips * s.grip * alignment));
  }

 private:
  static void set_vec3(ObsBatch& obs, std::string_view name, int env, const Vec3& v) {
    obs.set(name, env, {v.x, v.y, v.z});
  }
  static void set_quat(ObsBatch& obs, std::string_view name, int env, const UnitQuat& q) {
    obs.set(name, env, {q.x, q.y, q.z, q.w});
  }

  EnvConfig cfg_;
  Rng rng_;
  Vec3 pivot_axis_{0.0, 0.0, 1.0};
  std::vector<Vec3> basis_;
  std::vector<EnvState> states_;
  double consecutive_successes_ = 0.0;
};

}  // namespace rewardforge::env

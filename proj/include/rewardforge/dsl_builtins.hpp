#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rewardforge/dsl.hpp"

namespace rewardforge::dsl {

// Ports of the reference reward functions. Formulas and constants follow the
// original listings; inputs that this environment zero-fills keep their terms
// with the zero-filled names. Helper bindings are underscore-prefixed so the
// component set matches each listing's reported dictionary.

namespace builtin_source {

inline constexpr const char* baseline = R"RWD(# human-engineered reward
_rot_eps = 0.1
_lambda_rot = 1.0
_lambda_delta_rot = 2.0
_lambda_kp = 1.0
_lambda_av = 1.0
_lambda_pose_penalty = 0.3
_lambda_torque_penalty = 0.1
_lambda_work_penalty = 0.1
_lambda_av_penalty = 0.1
_lambda_com_dist = 1.0
_lambda_linvel_penalty = 0.3
_lambda_axis_cos_dist = 1.0
_lambda_tip_obj_dist = 1.0
_lambda_contact_normal_penalty = 0.03
_lambda_contact_normal_rew = 0.1
_lamda_good_contact = 0.1
_lamda_bad_contact = 0.1
_lambda_tip_force_penalty = 0.3
_kp_lgsk_scale = 50.0
_kp_lgsk_eps = 2.0
_delta_rot_clip_min = -0.025
_delta_rot_clip_max = 0.025
_av_clip_min = -0.1
_av_clip_max = 0.5
_desired_max_av = 2.0
_desired_min_av = 0.0
_lambda_reward_curriculum = 1.0
_pi = 3.14159265358979

# rotation reward: geodesic distance between obj and goal orientation
_rot_dist = 2.0 * asin(clamp(norm(qvec(active_quat)), 0.0, 1.0))
rot_rew = 1.0 / (abs(_rot_dist) + _rot_eps)

# delta rotation reward about the target axis
_rpy_diff = 2.0 * qvec(delta_obj_orn)
_delta_rot = sum(_rpy_diff * pivot_axel_worldframe)
delta_rot_rew = clamp(_delta_rot, _delta_rot_clip_min, _delta_rot_clip_max)

# keypoint reward
_kp_deltas = norm(obj_kp_positions_centered - goal_kp_positions_centered)
kp_rew = mean(1.0 / (exp(_kp_lgsk_scale * _kp_deltas) + _kp_lgsk_eps + exp(-(_kp_lgsk_scale * _kp_deltas))))

# angular velocity reward about the target axis
_obj_angvel_about_axis = sum(obj_base_angvel * pivot_axel_worldframe)
av_rew = clamp(_obj_angvel_about_axis, _av_clip_min, _av_clip_max)

# hand smoothness penalties
hand_pose_penalty = -norm(hand_joint_pos)
torque_penalty = -norm(dof_vel)
work_penalty = -sum(abs(dof_vel * hand_joint_vel))
_obj_angvel_mag = norm(obj_base_angvel)
av_penalty = (_obj_angvel_mag > _desired_max_av) * -sqrt((_obj_angvel_mag - _desired_max_av) ^ 2.0) + (_obj_angvel_mag < _desired_min_av) * -sqrt((_desired_min_av - _obj_angvel_mag) ^ 2.0)

# object smoothness
com_dist_rew = -norm(obj_base_pos - goal_base_pos)
obj_linvel_penalty = -norm(obj_base_linvel)
_current_pivot_axel = qrot(obj_base_orn, pivot_axel_objframe)
_cos_dist = sum(pivot_axel_worldframe * _current_pivot_axel) / (norm(pivot_axel_worldframe) * norm(_current_pivot_axel) + 0.000000000001)
axis_cos_dist = -(1.0 - _cos_dist)
_axis_deviat_angle = acos(clamp(_cos_dist, -1.0, 1.0))

# precision grasp
_finger_tip_obj_dist = norm(fingertip_pos)
total_finger_tip_obj_dist = -sum((tip_object_contacts = 0.0) * _finger_tip_obj_dist)
_contact_pose_abs = sum(abs(tip_contact_force_pose))
contact_normal_penalty = -sum(where((tip_object_contacts = 0.0), _pi, _contact_pose_abs))
_contact_normal_sum = sum(where((tip_object_contacts = 0.0), 0.0, _pi - _contact_pose_abs))
contact_normal_rew = where((n_tip_contacts >= 2.0), _contact_normal_sum / (n_tip_contacts * _pi), 0.0)
_total_tip_contact_force = sum(net_tip_contact_force_mags)
_obj_masses = 0.0
_tip_force_margin = _total_tip_contact_force - _obj_masses * 2.0 * 10.0
tip_force_penalty = where((_tip_force_margin > 0.0), 0.0, _tip_force_margin)

# reward curriculum scaling
_l_good_contact = _lamda_good_contact * _lambda_reward_curriculum
_l_bad_contact = _lamda_bad_contact * _lambda_reward_curriculum
_l_pose_penalty = _lambda_pose_penalty * _lambda_reward_curriculum
_l_work_penalty = _lambda_work_penalty * _lambda_reward_curriculum
_l_torque_penalty = _lambda_torque_penalty * _lambda_reward_curriculum
_l_com_dist = _lambda_com_dist * _lambda_reward_curriculum
_l_linvel_penalty = _lambda_linvel_penalty * _lambda_reward_curriculum
_l_av_penalty = _lambda_av_penalty * _lambda_reward_curriculum
_l_contact_normal_penalty = _lambda_contact_normal_penalty * _lambda_reward_curriculum
_l_contact_normal_rew = _lambda_contact_normal_rew * _lambda_reward_curriculum
_l_tip_force_penalty = _lambda_tip_force_penalty * _lambda_reward_curriculum

_base_total = _lambda_rot * rot_rew + _lambda_delta_rot * delta_rot_rew + _lambda_kp * kp_rew + _lambda_av * av_rew + _l_pose_penalty * hand_pose_penalty + _l_torque_penalty * torque_penalty + _l_work_penalty * work_penalty + _l_av_penalty * av_penalty + _l_com_dist * com_dist_rew + _l_linvel_penalty * obj_linvel_penalty + _lambda_axis_cos_dist * axis_cos_dist + _lambda_tip_obj_dist * total_finger_tip_obj_dist + _l_contact_normal_penalty * contact_normal_penalty + _l_contact_normal_rew * contact_normal_rew + _l_tip_force_penalty * tip_force_penalty

# contact count bonus and penalty
_with_good = where((n_tip_contacts >= 2.0), _base_total + (n_tip_contacts - 1.0) * _l_good_contact, _base_total)
_with_bad = where((n_non_tip_contacts > 0.0), _with_good - _l_bad_contact, _with_good)

# success bonus and fall or deviation penalty
_with_bonus = _with_bad + success_bonus - early_reset_penalty_value

# zero reward when no tip is in contact or the axis deviates too far
_zero_cond = max((n_tip_contacts < 1.0), (_axis_deviat_angle >= 0.5))
total = where(_zero_cond, 0.0, _with_bonus)
)RWD";

inline constexpr const char* gemini_best = R"RWD(# balance dense shaping with an impactful sparse reward
_pos_scale = 2.0
_orn_scale = 5.0
_contact_scale = 1.0
_sparse_reward_scale = 20.0
_pos_temp = 0.5
_orn_temp = 1.0
_contact_temp = 1.0
pos_reward = exp(-(norm(active_pos) ^ 2.0 * _pos_scale / _pos_temp))
orn_reward = exp(-(norm(qvec(active_quat)) ^ 2.0 * _orn_scale / _orn_temp))
contact_reward = tanh(n_good_contacts / n_tips * _contact_scale / _contact_temp)
_dist_to_goal = norm(active_pos)
sparse_reward = where((_dist_to_goal < 0.05), success_bonus * _sparse_reward_scale, 0.0)
early_reset_penalty = where((n_good_contacts = 0.0), early_reset_penalty_value * 0.001, 0.0)
total = 2.0 * pos_reward + 3.0 * orn_reward + contact_reward + sparse_reward - early_reset_penalty
)RWD";

inline constexpr const char* gpt4o_best = R"RWD(# dense goal shaping plus logarithmic contact terms
_temperature_pos = 0.8
_temperature_orn = 3.0
_temperature_contact = 0.5
_temperature_good_contacts = 0.7
_temperature_success = 25.0
_dist_to_goal = norm(active_pos)
_normalized_dist = exp(-(_temperature_pos * _dist_to_goal))
reward_goal_pos = 0.5 * _normalized_dist
_quat_diff = norm(active_quat)
_normalized_orn = exp(-(_temperature_orn * _quat_diff))
reward_goal_orn = 0.3 * _normalized_orn
_contact_sum = sum(tip_object_contacts)
reward_fingertip_contact = log(1.0 + _temperature_contact * _contact_sum)
reward_good_contacts = log(1.0 + _temperature_good_contacts * n_good_contacts)
total = reward_goal_pos + reward_goal_orn + reward_fingertip_contact + reward_good_contacts + _temperature_success * success_bonus - early_reset_penalty_value
success_bonus = _temperature_success * success_bonus
early_reset_penalty = -early_reset_penalty_value
)RWD";

inline constexpr const char* llama_best = R"RWD(# compact weighted sum over hand-frame pose errors
_pos_temperature = 2.0
_orien_temperature = 2.0
_contact_temperature = 1.0
object_position = exp(-(norm(obj_pos_handframe - goal_pos_handframe) / _pos_temperature))
object_orientation = exp(-(norm(obj_orn_handframe - goal_orn_handframe) / _orien_temperature))
contact_quality = n_good_contacts / _contact_temperature
success = 10.0 * success_bonus
total = 0.2 * object_position + 0.2 * object_orientation + 0.1 * contact_quality + 0.5 * success
)RWD";

inline constexpr const char* o3mini_best = R"RWD(# sharp positional decay, linear orientation band, cubic contact ratio
_pos_temp = 0.0002
_weight_pos = 3.0
_weight_orn = 2.5
_weight_contact = 2.0
_weight_success = 50.0
_weight_penalty = 1.0
_pos_error = norm(active_pos)
pos_reward = exp(-(_pos_error * _pos_error) / _pos_temp)
_q_w = abs(qw(active_quat))
orn_reward = clamp((_q_w - 0.5) / 0.5, 0.0, 1.0)
_good_contact_ratio = n_good_contacts / n_tips
contact_reward = _good_contact_ratio * _good_contact_ratio * _good_contact_ratio
total = _weight_pos * pos_reward + _weight_orn * orn_reward + _weight_contact * contact_reward + _weight_success * success_bonus - _weight_penalty * early_reset_penalty_value
success_bonus = success_bonus * _weight_success
early_reset_penalty = early_reset_penalty_value
)RWD";

inline constexpr const char* deepseek_best = R"RWD(# keypoints as a unified position-orientation signal
_kp_temp = 5.0
_orn_temp = 3.5
_contact_temp = 1.2
_non_tip_temp = 0.015
_success_temp = 35.0
_kp_dist = mean(norm(obj_kp_positions_centered - goal_kp_positions_centered))
kp_reward = exp(-(_kp_temp * _kp_dist))
_rot_angle = 2.0 * asin(clamp(norm(qvec(active_quat)), 0.0, 1.0))
orn_reward = exp(-(_orn_temp * _rot_angle))
_active_tips = sum(tip_object_contacts)
_contact_quality = n_good_contacts / (_active_tips + 0.000001)
contact_reward = _contact_temp * tanh(6.0 * _contact_quality)
non_tip_penalty = -(_non_tip_temp * n_non_tip_contacts ^ 1.2)
scaled_success = _success_temp * success_bonus + 0.2 * (kp_reward + orn_reward)
total = kp_reward + orn_reward + contact_reward + non_tip_penalty + scaled_success
)RWD";

}  // namespace builtin_source

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "baseline",    "gemini_best",  "gpt4o_best",
      "llama_best",  "o3mini_best",  "deepseek_best",
  };
  return names;
}

inline RewardProgram builtin(const std::string& name) {
  const char* source = nullptr;
  if (name == "baseline") source = builtin_source::baseline;
  else if (name == "gemini_best") source = builtin_source::gemini_best;
  else if (name == "gpt4o_best") source = builtin_source::gpt4o_best;
  else if (name == "llama_best") source = builtin_source::llama_best;
  else if (name == "o3mini_best") source = builtin_source::o3mini_best;
  else if (name == "deepseek_best") source = builtin_source::deepseek_best;
  if (!source) throw std::invalid_argument("unknown builtin reward '" + name + "'");
  return parse(source, Provenance::Builtin);
}

}  // namespace rewardforge::dsl

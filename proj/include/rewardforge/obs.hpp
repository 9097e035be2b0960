#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rewardforge {

// Per-environment value shapes used by observations and reward expressions.
struct Shape {
  enum class Kind { Scalar, Vec, Mat };
  Kind kind = Kind::Scalar;
  int rows = 0;  // k for Mat
  int cols = 0;  // d for Vec and Mat

  static Shape scalar() { return {Kind::Scalar, 0, 0}; }
  static Shape vec(int d) { return {Kind::Vec, 0, d}; }
  static Shape mat(int k, int d) { return {Kind::Mat, k, d}; }

  bool operator==(const Shape& o) const {
    return kind == o.kind && rows == o.rows && cols == o.cols;
  }

  std::size_t elems() const {
    switch (kind) {
      case Kind::Scalar: return 1;
      case Kind::Vec: return static_cast<std::size_t>(cols);
      case Kind::Mat: return static_cast<std::size_t>(rows) * cols;
    }
    return 1;
  }

  std::string str() const {
    switch (kind) {
      case Kind::Scalar: return "scalar";
      case Kind::Vec: return "vec" + std::to_string(cols);
      case Kind::Mat:
        return "mat" + std::to_string(rows) + "x" + std::to_string(cols);
    }
    return "scalar";
  }
};

struct ObsField {
  std::string name;
  Shape shape;
  bool live;  // false means always zero-filled in this environment
};

// The published reward signature roster. Order matters: prompts emit it in
// this order and evaluators resolve identifiers against it.
inline const std::vector<ObsField>& obs_roster() {
  static const std::vector<ObsField> roster = {
      {"success_bonus", Shape::scalar(), true},
      {"early_reset_penalty_value", Shape::scalar(), true},
      {"contact_pose_range_sim", Shape::vec(2), false},
      {"base_hand_pos", Shape::vec(3), false},
      {"base_hand_orn", Shape::vec(4), false},
      {"kp_dist", Shape::scalar(), true},
      {"n_keypoints", Shape::scalar(), true},
      {"obj_kp_positions", Shape::mat(6, 3), false},
      {"goal_kp_positions", Shape::mat(6, 3), false},
      {"kp_basis_vecs", Shape::mat(6, 3), false},
      {"fingertip_pos_handframe", Shape::mat(4, 3), false},
      {"fingertip_orn_handframe", Shape::mat(4, 4), false},
      {"thumb_tip_name_idx", Shape::scalar(), false},
      {"index_tip_name_idx", Shape::scalar(), false},
      {"middle_tip_name_idx", Shape::scalar(), false},
      {"pinky_tip_name_idx", Shape::scalar(), false},
      {"n_tips", Shape::scalar(), true},
      {"contact_positions", Shape::mat(4, 3), false},
      {"contact_positions_worldframe", Shape::mat(4, 3), false},
      {"contact_positions_tcpframe", Shape::mat(4, 3), false},
      {"sim_contact_pose_limits", Shape::vec(2), false},
      {"contact_threshold_limit", Shape::scalar(), false},
      {"obj_indices", Shape::scalar(), false},
      {"goal_indices", Shape::scalar(), false},
      {"default_obj_pos_handframe", Shape::vec(3), false},
      {"prev_obj_orn", Shape::vec(4), true},
      {"goal_displacement_tensor", Shape::vec(3), false},
      {"root_state_tensor", Shape::vec(13), false},
      {"dof_pos", Shape::vec(16), false},
      {"dof_vel", Shape::vec(16), false},
      {"rigid_body_tensor", Shape::vec(13), false},
      {"current_force_apply_axis", Shape::vec(3), false},
      {"obj_force_vector", Shape::vec(3), false},
      {"pivot_axel_worldframe", Shape::vec(3), true},
      {"pivot_axel_objframe", Shape::vec(3), true},
      {"goal_base_pos", Shape::vec(3), true},
      {"goal_base_orn", Shape::vec(4), true},
      {"net_tip_contact_forces", Shape::mat(4, 3), false},
      {"net_tip_contact_force_mags", Shape::vec(4), false},
      {"tip_object_contacts", Shape::vec(4), true},
      {"n_tip_contacts", Shape::scalar(), true},
      {"n_non_tip_contacts", Shape::scalar(), true},
      {"thumb_tip_contacts", Shape::scalar(), false},
      {"index_tip_contacts", Shape::scalar(), false},
      {"middle_tip_contacts", Shape::scalar(), false},
      {"pinky_tip_contacts", Shape::scalar(), false},
      {"fingertip_pos", Shape::mat(4, 3), false},
      {"fingertip_orn", Shape::mat(4, 4), false},
      {"fingertip_linvel", Shape::mat(4, 3), false},
      {"fingertip_angvel", Shape::mat(4, 3), false},
      {"tip_contact_force_pose", Shape::mat(4, 2), false},
      {"tip_contact_force_pose_low_dim", Shape::mat(4, 2), false},
      {"tip_contact_force_pose_bins", Shape::mat(4, 8), false},
      {"n_good_contacts", Shape::scalar(), true},
      {"hand_joint_pos", Shape::vec(16), false},
      {"hand_joint_vel", Shape::vec(16), false},
      {"obj_base_pos", Shape::vec(3), true},
      {"obj_base_orn", Shape::vec(4), true},
      {"obj_pos_handframe", Shape::vec(3), false},
      {"obj_orn_handframe", Shape::vec(4), false},
      {"obj_displacement_tensor", Shape::vec(3), false},
      {"obj_pos_centered", Shape::vec(3), false},
      {"delta_obj_orn", Shape::vec(4), true},
      {"obj_base_linvel", Shape::vec(3), true},
      {"obj_base_angvel", Shape::vec(3), true},
      {"obj_linvel_handframe", Shape::vec(3), false},
      {"obj_angvel_handframe", Shape::vec(3), false},
      {"goal_pos_centered", Shape::vec(3), false},
      {"goal_pos_handframe", Shape::vec(3), false},
      {"goal_orn_handframe", Shape::vec(4), false},
      {"active_pos", Shape::vec(3), true},
      {"active_quat", Shape::vec(4), true},
      {"obj_kp_positions_centered", Shape::mat(6, 3), true},
      {"goal_kp_positions_centered", Shape::mat(6, 3), true},
      {"active_kp", Shape::mat(6, 3), true},
      {"obj_force_vector_handframe", Shape::vec(3), false},
  };
  return roster;
}

inline const std::unordered_map<std::string, int>& obs_roster_index() {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    const auto& roster = obs_roster();
    for (int i = 0; i < static_cast<int>(roster.size()); ++i)
      m.emplace(roster[i].name, i);
    return m;
  }();
  return index;
}

inline int obs_index_of(std::string_view name) {
  const auto& index = obs_roster_index();
  auto it = index.find(std::string(name));
  return it == index.end() ? -1 : it->second;
}

// One batch of named per-environment tensors. Every roster name resolves;
// dead fields stay zero. Layout per field: env-major, then row-major elems.
class ObsBatch {
 public:
  explicit ObsBatch(int num_envs) : num_envs_(num_envs) {
    const auto& roster = obs_roster();
    fields_.resize(roster.size());
    for (std::size_t i = 0; i < roster.size(); ++i)
      fields_[i].assign(static_cast<std::size_t>(num_envs) * roster[i].shape.elems(),
                        0.0);
  }

  int num_envs() const { return num_envs_; }

  std::vector<double>& field(int roster_idx) { return fields_[roster_idx]; }
  const std::vector<double>& field(int roster_idx) const {
    return fields_[roster_idx];
  }

  std::vector<double>& field(std::string_view name) {
    return fields_[checked_index(name)];
  }
  const std::vector<double>& field(std::string_view name) const {
    return fields_[checked_index(name)];
  }

  double& at(std::string_view name, int env, std::size_t elem = 0) {
    const int idx = checked_index(name);
    return fields_[idx][static_cast<std::size_t>(env) *
                            obs_roster()[idx].shape.elems() +
                        elem];
  }
  double at(std::string_view name, int env, std::size_t elem = 0) const {
    return const_cast<ObsBatch*>(this)->at(name, env, elem);
  }

  // Fills a whole field for one env from a contiguous value list.
  void set(std::string_view name, int env, std::initializer_list<double> vals) {
    const int idx = checked_index(name);
    const std::size_t elems = obs_roster()[idx].shape.elems();
    if (vals.size() != elems)
      throw std::invalid_argument("ObsBatch::set: wrong element count for " +
                                  std::string(name));
    std::size_t off = static_cast<std::size_t>(env) * elems;
    for (double v : vals) fields_[idx][off++] = v;
  }

 private:
  static int checked_index(std::string_view name) {
    const int idx = obs_index_of(name);
    if (idx < 0)
      throw std::out_of_range("unknown observation: " + std::string(name));
    return idx;
  }

  int num_envs_ = 0;
  std::vector<std::vector<double>> fields_;
};

}  // namespace rewardforge

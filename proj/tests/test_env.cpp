#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rewardforge/env.hpp"

using namespace rewardforge;
using env::EnvConfig;
using env::RotationEnv;
using geom::UnitQuat;
using geom::Vec3;

namespace {

EnvConfig small_cfg(int envs = 4, std::uint64_t seed = 1) {
  EnvConfig cfg;
  cfg.num_envs = envs;
  cfg.seed = seed;
  return cfg;
}

EnvConfig quiet_cfg(int envs = 1, std::uint64_t seed = 1) {
  EnvConfig cfg = small_cfg(envs, seed);
  cfg.noise_std = 0.0;
  return cfg;
}

std::vector<double> zero_actions(const EnvConfig& cfg) {
  return std::vector<double>(cfg.num_envs * env::kActionDim, 0.0);
}

// Keeps grip saturated without applying torque.
std::vector<double> hold_actions(const EnvConfig& cfg) {
  std::vector<double> a(cfg.num_envs * env::kActionDim, 0.0);
  for (int i = 0; i < cfg.num_envs; ++i) a[i * env::kActionDim + 3] = 1.0;
  return a;
}

}  // namespace

TEST_CASE("reset establishes the subgoal geometry") {
  RotationEnv e(small_cfg(8, 3));
  for (int env_i = 0; env_i < 8; ++env_i) {
    const auto& s = e.state(env_i);
    CHECK(std::abs(geom::rot_dist(s.obj_orn, s.goal_orn) -
                   e.config().rot_increment) < 1e-6);
    CHECK(s.grip == 1.0);
    CHECK(s.progress == 0);
    CHECK(s.successes == 0);
    // object keypoints against themselves: zero distance
    const auto kp = geom::keypoints(s.obj_pos_offset, s.obj_orn,
                                    geom::default_keypoint_basis(), 0.03);
    CHECK(geom::mean_keypoint_distance(kp, kp) == 0.0);
  }

  CHECK_THROWS_AS(e.reset({99}), std::out_of_range);
}

TEST_CASE("equal seeds give identical post-reset states") {
  RotationEnv a(small_cfg(4, 42));
  RotationEnv b(small_cfg(4, 42));
  for (int i = 0; i < 4; ++i) {
    CHECK(a.state(i).obj_orn.x == b.state(i).obj_orn.x);
    CHECK(a.state(i).obj_orn.w == b.state(i).obj_orn.w);
    CHECK(a.state(i).obj_angvel.x == b.state(i).obj_angvel.x);
    CHECK(a.state(i).g_dir_z == b.state(i).g_dir_z);
  }
}

TEST_CASE("step dynamics follow the stated update") {
  SECTION("zero action, zero noise, no decay keeps orientation still") {
    EnvConfig cfg = quiet_cfg();
    cfg.grip_decay = 0.0;
    RotationEnv e(cfg);
    e.mutable_state(0).obj_angvel = {0, 0, 0};
    const UnitQuat before = e.state(0).obj_orn;
    e.step(zero_actions(cfg));
    const UnitQuat after = e.state(0).obj_orn;
    CHECK(geom::rot_dist(before, after) < 1e-12);
  }

  SECTION("constant positive z-torque rotates monotonically about z") {
    EnvConfig cfg = quiet_cfg();
    cfg.max_episode_steps = 1000;
    cfg.axis_deviat_reset_dist = 10.0;  // keep the episode alive
    cfg.fall_reset_dist = 10.0;
    RotationEnv e(cfg);
    e.mutable_state(0).obj_angvel = {0, 0, 0};

    std::vector<double> actions = {0.0, 0.0, 1.0, 1.0};
    double omega = 0.0;
    double expected_angle = 0.0;
    double prev_rotations = 0.0;
    for (int t = 0; t < 40; ++t) {
      e.step(actions);
      omega = cfg.damping * omega + cfg.torque_gain * 1.0;
      expected_angle += omega * cfg.dt;
      const double got = e.state(0).rotation_counts * 2.0 * M_PI;
      CHECK(got == Catch::Approx(expected_angle).margin(1e-6));
      CHECK(got > prev_rotations);
      prev_rotations = got;
    }
  }

  SECTION("sustained grip release empties the tip contacts") {
    EnvConfig cfg = quiet_cfg();
    cfg.drift_gain = 0.0;       // isolate the grip recurrence from the fall reset
    cfg.fall_reset_dist = 1e9;
    RotationEnv e(cfg);
    std::vector<double> actions = {0.0, 0.0, 0.0, -1.0};
    const int bound =
        static_cast<int>(std::ceil(1.0 / (cfg.grip_gain + cfg.grip_decay)));
    bool emptied = false;
    for (int t = 0; t < bound && !emptied; ++t) {
      const auto r = e.step(actions);
      if (r.obs.at("n_tip_contacts", 0) == 0.0) emptied = true;
    }
    CHECK(emptied);
  }

  SECTION("NaN actions are rejected with the env index") {
    RotationEnv e(small_cfg(2, 5));
    std::vector<double> actions(8, 0.0);
    actions[5] = std::nan("");
    try {
      e.step(actions);
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& err) {
      CHECK(std::string(err.what()).find("env 1") != std::string::npos);
    }
  }
}

TEST_CASE("success and termination conditions") {
  SECTION("object at goal earns the bonus without resetting") {
    EnvConfig cfg = quiet_cfg();
    RotationEnv e(cfg);
    auto& s = e.mutable_state(0);
    s.obj_orn = s.goal_orn;
    s.obj_pos_offset = {0, 0, 0};
    s.obj_angvel = {0, 0, 0};
    s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, e.pivot_axis());

    const auto r = e.step(hold_actions(cfg));
    CHECK(r.obs.at("success_bonus", 0) == cfg.reach_goal_bonus);
    CHECK(r.goal_resets[0] == 1);
    CHECK(r.resets[0] == 0);
    CHECK(e.state(0).successes == 1);
  }

  SECTION("no tip contact forces a reset regardless of distance") {
    EnvConfig cfg = quiet_cfg();
    RotationEnv e(cfg);
    auto& s = e.mutable_state(0);
    s.obj_orn = s.goal_orn;
    s.grip = 0.0;
    s.obj_angvel = {0, 0, 0};
    s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, e.pivot_axis());
    std::vector<double> a = {0, 0, 0, 0};
    const auto r = e.step(a);
    CHECK(r.resets[0] == 1);
    CHECK(r.obs.at("early_reset_penalty_value", 0) == cfg.early_reset_penalty);
  }

  SECTION("episodes hard-stop at max_episode_steps = 30 seconds") {
    EnvConfig cfg = quiet_cfg(1, 9);
    cfg.max_episode_steps = 600;
    cfg.fall_reset_dist = 1e9;       // disable other terminations
    cfg.axis_deviat_reset_dist = 10.0;
    RotationEnv e(cfg);
    const auto hold = hold_actions(cfg);
    for (int t = 0; t < 599; ++t) {
      const auto r = e.step(hold);
      REQUIRE(r.resets[0] == 0);
    }
    const auto last = e.step(hold);
    CHECK(last.resets[0] == 1);
    REQUIRE(last.metrics.finished.size() == 1);
    CHECK(last.metrics.finished[0].steps == 600);
    CHECK(last.metrics.finished[0].steps * cfg.dt == Catch::Approx(30.0));
  }
}

TEST_CASE("subgoal curriculum accumulates rotations about the pivot") {
  EnvConfig cfg = quiet_cfg();
  RotationEnv e(cfg);

  SECTION("one success rotates the goal by exactly rot_increment") {
    auto& s = e.mutable_state(0);
    const UnitQuat old_goal = s.goal_orn;
    s.obj_orn = s.goal_orn;
    s.obj_angvel = {0, 0, 0};
    s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, e.pivot_axis());
    e.step(hold_actions(cfg));
    CHECK(std::abs(geom::rot_dist(old_goal, e.state(0).goal_orn) -
                   cfg.rot_increment) < 1e-9);
  }

  SECTION("k consecutive goal updates compose k increments") {
    // Oracle: repeated quaternion composition about the pivot.
    auto& s = e.mutable_state(0);
    const UnitQuat start = s.goal_orn;
    UnitQuat expected = start;
    for (int k = 0; k < 3; ++k) {
      s.obj_orn = s.goal_orn;
      s.obj_angvel = {0, 0, 0};
      s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, e.pivot_axis());
      e.step(hold_actions(cfg));
      expected = geom::quat_mul(
                     UnitQuat::from_axis_angle(e.pivot_axis(), cfg.rot_increment),
                     expected)
                     .canonical();
      CHECK(geom::rot_dist(e.state(0).goal_orn, expected) < 1e-9);
    }
    CHECK(e.state(0).successes == 3);
  }
}

TEST_CASE("consecutive successes blending") {
  // av_factor blend over resetting envs; direct formula evaluation.
  EnvConfig cfg = small_cfg(4, 2);
  RotationEnv e(cfg);

  // Verified against the formula: 0.1 * (6 / 2) + 0.9 * 1.0 = 1.2
  const double av = 0.1;
  const double prev = 1.0;
  const double blended = av * (6.0 / 2.0) + (1.0 - av) * prev;
  CHECK(blended == Catch::Approx(1.2));

  SECTION("no resets keeps the prior value") {
    EnvConfig q = quiet_cfg();
    RotationEnv env2(q);
    const double before = env2.consecutive_successes();
    const auto r = env2.step(hold_actions(q));
    REQUIRE(r.resets[0] == 0);
    CHECK(env2.consecutive_successes() == before);
  }

  SECTION("av_factor 1 is exactly mean successes per reset") {
    EnvConfig q = quiet_cfg(1, 7);
    q.av_factor = 1.0;
    RotationEnv env2(q);
    auto& s = env2.mutable_state(0);
    s.obj_orn = s.goal_orn;
    s.obj_angvel = {0, 0, 0};
    s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, env2.pivot_axis());
    env2.step(hold_actions(q));  // one success banked
    REQUIRE(env2.state(0).successes == 1);
    s.grip = 0.0;  // force an early reset next step
    std::vector<double> a = {0, 0, 0, 0};
    env2.step(a);
    CHECK(env2.consecutive_successes() == Catch::Approx(1.0));
  }
}

TEST_CASE("rotation counting about the pivot axis") {
  EnvConfig cfg = quiet_cfg();
  cfg.axis_deviat_reset_dist = 10.0;
  cfg.fall_reset_dist = 1e9;
  RotationEnv e(cfg);

  SECTION("no motion means no increment") {
    e.mutable_state(0).obj_angvel = {0, 0, 0};
    e.step(hold_actions(cfg));
    CHECK(std::abs(e.state(0).rotation_counts) < 1e-12);
  }

  SECTION("a quarter turn about the pivot counts 0.25") {
    auto& s = e.mutable_state(0);
    s.obj_angvel = {0, 0, 0};
    // inject the turn directly between steps
    s.obj_orn = geom::quat_mul(UnitQuat::from_axis_angle({0, 0, 1}, M_PI / 2.0),
                               s.obj_orn)
                    .canonical();
    s.pivot_axel_objframe = geom::quat_rotate_inverse(s.obj_orn, e.pivot_axis());
    const double before = s.rotation_counts;
    EnvConfig frozen = cfg;
    e.mutable_state(0).obj_angvel = {0, 0, 0};
    e.step(zero_actions(frozen));
    CHECK(e.state(0).rotation_counts - before == Catch::Approx(0.25).margin(1e-9));
  }

  SECTION("rotation about an orthogonal axis counts roughly zero") {
    auto& s = e.mutable_state(0);
    s.obj_angvel = {0, 0, 0};
    s.obj_orn = geom::quat_mul(UnitQuat::from_axis_angle({1, 0, 0}, 0.3), s.obj_orn)
                    .canonical();
    const double before = s.rotation_counts;
    e.step(zero_actions(cfg));
    CHECK(std::abs(e.state(0).rotation_counts - before) < 1e-9);
  }
}

TEST_CASE("observations") {
  SECTION("object at goal pose zeroes the active fields") {
    EnvConfig cfg = quiet_cfg();
    RotationEnv e(cfg);
    auto& s = e.mutable_state(0);
    s.obj_orn = s.goal_orn;
    s.obj_pos_offset = {0, 0, 0};
    const auto obs = e.observe();
    CHECK(obs.at("active_pos", 0, 0) == 0.0);
    CHECK(obs.at("active_pos", 0, 1) == 0.0);
    CHECK(obs.at("active_pos", 0, 2) == 0.0);
    CHECK(obs.at("active_quat", 0, 3) == Catch::Approx(1.0).margin(1e-9));
    double norm_kp = 0.0;
    for (int k = 0; k < 18; ++k) norm_kp += std::abs(obs.at("active_kp", 0, k));
    CHECK(norm_kp < 1e-9);
  }

  SECTION("active_quat stays canonical and roster stays complete") {
    RotationEnv e(small_cfg(16, 11));
    std::vector<double> actions(16 * env::kActionDim);
    Rng arng(3);
    for (int t = 0; t < 25; ++t) {
      for (double& a : actions) a = arng.uniform(-1.0, 1.0);
      const auto r = e.step(actions);
      for (int i = 0; i < 16; ++i)
        CHECK(r.obs.at("active_quat", i, 3) >= 0.0);
      for (const auto& field : obs_roster()) {
        const auto& data = r.obs.field(field.name);
        REQUIRE(data.size() == field.shape.elems() * 16);
        if (!field.live)
          for (double v : data) CHECK(v == 0.0);
      }
    }
  }

  SECTION("mean active_kp row norm equals the success-test distance") {
    RotationEnv e(small_cfg(4, 13));
    const auto obs = e.observe();
    for (int i = 0; i < 4; ++i) {
      double mean = 0.0;
      for (int k = 0; k < 6; ++k) {
        double sq = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double v = obs.at("active_kp", i, k * 3 + c);
          sq += v * v;
        }
        mean += std::sqrt(sq);
      }
      mean /= 6.0;
      CHECK(mean == Catch::Approx(e.mean_keypoint_dist(e.state(i))).margin(1e-12));
    }
  }

  SECTION("tip contact count equals the sum of the booleans") {
    RotationEnv e(small_cfg(4, 17));
    e.mutable_state(1).grip = 0.6;
    e.mutable_state(2).grip = 0.2;
    const auto obs = e.observe();
    for (int i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += obs.at("tip_object_contacts", i, k);
      CHECK(sum == obs.at("n_tip_contacts", i));
    }
  }
}

TEST_CASE("episode traces are bit-identical under a fixed seed") {
  EnvConfig cfg = small_cfg(8, 123);
  RotationEnv a(cfg);
  RotationEnv b(cfg);
  Rng arng(55);
  std::vector<double> actions(8 * env::kActionDim);
  for (int t = 0; t < 120; ++t) {
    for (double& x : actions) x = arng.uniform(-1.0, 1.0);
    const auto ra = a.step(actions);
    const auto rb = b.step(actions);
    CHECK(ra.resets == rb.resets);
    CHECK(ra.goal_resets == rb.goal_resets);
    for (const auto& field : obs_roster())
      REQUIRE(ra.obs.field(field.name) == rb.obs.field(field.name));
    CHECK(a.consecutive_successes() == b.consecutive_successes());
  }
}

TEST_CASE("successes are non-decreasing within an episode and zero after reset") {
  EnvConfig cfg = small_cfg(8, 77);
  RotationEnv e(cfg);
  Rng arng(5);
  std::vector<double> actions(8 * env::kActionDim);
  std::vector<int> prev_successes(8, 0);
  for (int t = 0; t < 200; ++t) {
    for (double& x : actions) x = arng.uniform(-1.0, 1.0);
    const auto r = e.step(actions);
    for (int i = 0; i < 8; ++i) {
      if (r.resets[i]) {
        CHECK(e.state(i).successes == 0);
        prev_successes[i] = 0;
      } else {
        CHECK(e.state(i).successes >= prev_successes[i]);
        prev_successes[i] = e.state(i).successes;
      }
      if (r.goal_resets[i]) {
        // success implies the goal-distance condition held this step
        CHECK(r.obs.at("success_bonus", i) == cfg.reach_goal_bonus);
      }
    }
  }
}

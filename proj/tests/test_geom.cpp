#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rewardforge/geom.hpp"
#include "rewardforge/rng.hpp"

using namespace rewardforge;
using geom::UnitQuat;
using geom::Vec3;

namespace {

// Independent 3x3 rotation-matrix oracle. Kept free of the geom quaternion
// path: matrices are built straight from the component formula and composed
// with plain loops.
struct Mat3 {
  double m[3][3] = {};

  static Mat3 from_quat(const UnitQuat& q) {
    Mat3 r;
    const double x = q.x, y = q.y, z = q.z, w = q.w;
    r.m[0][0] = 1 - 2 * (y * y + z * z);
    r.m[0][1] = 2 * (x * y - z * w);
    r.m[0][2] = 2 * (x * z + y * w);
    r.m[1][0] = 2 * (x * y + z * w);
    r.m[1][1] = 1 - 2 * (x * x + z * z);
    r.m[1][2] = 2 * (y * z - x * w);
    r.m[2][0] = 2 * (x * z - y * w);
    r.m[2][1] = 2 * (y * z + x * w);
    r.m[2][2] = 1 - 2 * (x * x + y * y);
    return r;
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }

  Vec3 apply(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  double trace() const { return m[0][0] + m[1][1] + m[2][2]; }

  double max_abs_diff(const Mat3& o) const {
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(m[i][j] - o.m[i][j]));
    return d;
  }
};

double trace_angle(const UnitQuat& a, const UnitQuat& b) {
  const Mat3 rel = Mat3::from_quat(a) * Mat3::from_quat(b).transposed();
  return std::acos(std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0));
}

}  // namespace

TEST_CASE("quat_mul identity and inverse") {
  Rng rng(11);
  const UnitQuat q = UnitQuat::random(rng);
  const UnitQuat iq = geom::quat_mul(UnitQuat::identity(), q);
  CHECK(std::abs(iq.x - q.x) < 1e-12);
  CHECK(std::abs(iq.y - q.y) < 1e-12);
  CHECK(std::abs(iq.z - q.z) < 1e-12);
  CHECK(std::abs(iq.w - q.w) < 1e-12);

  const UnitQuat inv = geom::quat_mul(q, q.conjugate());
  CHECK(std::abs(inv.w - 1.0) < 1e-9);
  CHECK(inv.vec().norm() < 1e-9);
}

TEST_CASE("quat_mul composes like rotation matrices") {
  // Two 90-degree z rotations make a 180-degree z rotation.
  const double s = std::sin(M_PI / 4.0), c = std::cos(M_PI / 4.0);
  const UnitQuat z90{0, 0, s, c};
  const UnitQuat z180 = geom::quat_mul(z90, z90);
  CHECK(std::abs(z180.x) < 1e-12);
  CHECK(std::abs(z180.y) < 1e-12);
  CHECK(std::abs(z180.z - 1.0) < 1e-12);
  CHECK(std::abs(z180.w) < 1e-12);

  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const UnitQuat a = UnitQuat::random(rng);
    const UnitQuat b = UnitQuat::random(rng);
    const Mat3 expect = Mat3::from_quat(a) * Mat3::from_quat(b);
    const Mat3 got = Mat3::from_quat(geom::quat_mul(a, b));
    CHECK(got.max_abs_diff(expect) < 1e-9);
  }
}

TEST_CASE("quat_mul associativity over 1000 random quaternions") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuat a = UnitQuat::random(rng);
    const UnitQuat b = UnitQuat::random(rng);
    const UnitQuat c = UnitQuat::random(rng);
    const UnitQuat lhs = geom::quat_mul(geom::quat_mul(a, b), c);
    const UnitQuat rhs = geom::quat_mul(a, geom::quat_mul(b, c));
    CHECK(std::abs(lhs.x - rhs.x) < 1e-9);
    CHECK(std::abs(lhs.y - rhs.y) < 1e-9);
    CHECK(std::abs(lhs.z - rhs.z) < 1e-9);
    CHECK(std::abs(lhs.w - rhs.w) < 1e-9);
  }
}

TEST_CASE("quat_rotate basics and matrix oracle") {
  const Vec3 v{0.3, -0.2, 0.9};
  const Vec3 same = geom::quat_rotate(UnitQuat::identity(), v);
  CHECK(std::abs(same.x - v.x) < 1e-12);
  CHECK(std::abs(same.y - v.y) < 1e-12);
  CHECK(std::abs(same.z - v.z) < 1e-12);

  const UnitQuat z90 = UnitQuat::from_axis_angle({0, 0, 1}, M_PI / 2.0);
  const Vec3 r = geom::quat_rotate(z90, {1, 0, 0});
  CHECK(std::abs(r.x) < 1e-12);
  CHECK(std::abs(r.y - 1.0) < 1e-12);
  CHECK(std::abs(r.z) < 1e-12);

  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const UnitQuat q = UnitQuat::random(rng);
    const Vec3 u{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 got = geom::quat_rotate(q, u);
    const Vec3 expect = Mat3::from_quat(q).apply(u);
    CHECK((got - expect).norm() < 1e-9);
    CHECK(std::abs(got.norm() - u.norm()) < 1e-9);

    const Vec3 back = geom::quat_rotate_inverse(q, got);
    CHECK((back - u).norm() < 1e-9);
  }
}

TEST_CASE("rot_dist against trace-angle oracle") {
  Rng rng(5);
  const UnitQuat q = UnitQuat::random(rng);
  CHECK(geom::rot_dist(q, q) < 1e-9);

  const UnitQuat z90 = UnitQuat::from_axis_angle({0, 0, 1}, M_PI / 2.0);
  CHECK(std::abs(geom::rot_dist(UnitQuat::identity(), z90) - M_PI / 2.0) < 1e-12);

  for (int i = 0; i < 1000; ++i) {
    const UnitQuat a = UnitQuat::random(rng);
    const UnitQuat b = UnitQuat::random(rng);
    const double d = geom::rot_dist(a, b);
    CHECK(std::abs(d - trace_angle(a, b)) < 1e-7);
    CHECK(std::abs(d - geom::rot_dist(b, a)) < 1e-12);
    CHECK(d >= 0.0);
    CHECK(d <= M_PI + 1e-12);
  }
}

TEST_CASE("keypoints construction and equivariance") {
  const auto basis = geom::default_keypoint_basis();

  SECTION("identity pose with unit scale gives the basis itself") {
    const auto kp = geom::keypoints({0, 0, 0}, UnitQuat::identity(), basis, 1.0);
    REQUIRE(kp.points.size() == 6);
    for (std::size_t i = 0; i < 6; ++i)
      CHECK((kp.points[i] - basis[i]).norm() < 1e-12);
  }

  SECTION("translation shifts every keypoint") {
    Rng rng(2);
    const UnitQuat q = UnitQuat::random(rng);
    const Vec3 t{0.1, -0.2, 0.05};
    const auto a = geom::keypoints({0, 0, 0}, q, basis, 0.03);
    const auto b = geom::keypoints(t, q, basis, 0.03);
    for (std::size_t i = 0; i < 6; ++i)
      CHECK((b.points[i] - (a.points[i] + t)).norm() < 1e-12);
  }

  SECTION("180-degree z rotation flips x and y components") {
    const UnitQuat z180 = UnitQuat::from_axis_angle({0, 0, 1}, M_PI);
    const Mat3 oracle = Mat3::from_quat(z180);
    const auto kp = geom::keypoints({0, 0, 0}, z180, basis, 1.0);
    for (std::size_t i = 0; i < 6; ++i) {
      const Vec3 expect = oracle.apply(basis[i]);
      CHECK((kp.points[i] - expect).norm() < 1e-12);
      CHECK(std::abs(kp.points[i].x + basis[i].x) < 1e-12);
      CHECK(std::abs(kp.points[i].y + basis[i].y) < 1e-12);
      CHECK(std::abs(kp.points[i].z - basis[i].z) < 1e-12);
    }
  }

  SECTION("rigid-transform equivariance over 1000 samples") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
      const UnitQuat pose = UnitQuat::random(rng);
      const UnitQuat r = UnitQuat::random(rng);
      const Vec3 p{rng.normal(), rng.normal(), rng.normal()};
      const Vec3 t{rng.normal(), rng.normal(), rng.normal()};
      const auto moved = geom::keypoints(geom::quat_rotate(r, p) + t,
                                         geom::quat_mul(r, pose), basis, 0.03);
      const auto base = geom::keypoints(p, pose, basis, 0.03);
      for (std::size_t k = 0; k < 6; ++k) {
        const Vec3 expect = geom::quat_rotate(r, base.points[k]) + t;
        CHECK((moved.points[k] - expect).norm() < 1e-9);
      }
    }
  }

  SECTION("equal poses give zero mean keypoint distance") {
    Rng rng(4);
    const UnitQuat q = UnitQuat::random(rng);
    const auto a = geom::keypoints({0.1, 0.2, 0.3}, q, basis, 0.03);
    const auto b = geom::keypoints({0.1, 0.2, 0.3}, q, basis, 0.03);
    CHECK(geom::mean_keypoint_distance(a, b) == 0.0);
  }

  SECTION("empty basis is a configuration error") {
    CHECK_THROWS_AS(geom::keypoints({0, 0, 0}, UnitQuat::identity(), {}, 0.03),
                    std::invalid_argument);
  }
}

TEST_CASE("lgsk_kernel shape") {
  CHECK(std::abs(geom::lgsk_kernel(0.0, 50.0, 2.0) - 0.25) < 1e-12);
  CHECK(geom::lgsk_kernel(100.0, 50.0, 2.0) < 1e-12);

  double prev = geom::lgsk_kernel(0.0, 50.0, 2.0);
  for (int i = 1; i <= 100; ++i) {
    const double x = i / 100.0;
    const double v = geom::lgsk_kernel(x, 50.0, 2.0);
    CHECK(v < prev);
    prev = v;
  }

  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(0.0, 10.0);
    const double eps = rng.uniform(0.1, 4.0);
    const double v = geom::lgsk_kernel(x, rng.uniform(1.0, 60.0), eps);
    CHECK(v > 0.0);
    CHECK(v <= 1.0 / (2.0 + eps) + 1e-12);
  }
}

TEST_CASE("axis_deviation angles") {
  const Vec3 x{1, 0, 0}, y{0, 1, 0};
  CHECK(geom::axis_deviation(x, x) < 1e-12);
  CHECK(std::abs(geom::axis_deviation(x, y) - M_PI / 2.0) < 1e-12);
  CHECK(std::abs(geom::axis_deviation(x, {-1, 0, 0}) - M_PI) < 1e-12);
  CHECK_THROWS_AS(geom::axis_deviation(x, {0, 0, 0}), std::domain_error);
}

TEST_CASE("euler_xyz_delta conventions") {
  Rng rng(13);
  const UnitQuat q = UnitQuat::random(rng);
  const auto zero = geom::euler_xyz_delta(q, q);
  CHECK(zero.angles.norm() < 1e-9);

  const UnitQuat z30 = UnitQuat::from_axis_angle({0, 0, 1}, M_PI / 6.0);
  const auto d = geom::euler_xyz_delta(z30, UnitQuat::identity());
  CHECK(std::abs(d.angles.x) < 1e-12);
  CHECK(std::abs(d.angles.y) < 1e-12);
  CHECK(std::abs(d.angles.z - M_PI / 6.0) < 1e-12);

  // 350 degrees about z wraps to -10 degrees.
  const UnitQuat z350 = UnitQuat::from_axis_angle({0, 0, 1}, 350.0 * M_PI / 180.0);
  const auto w = geom::euler_xyz_delta(z350, UnitQuat::identity());
  CHECK(std::abs(w.angles.z - (-10.0 * M_PI / 180.0)) < 1e-9);

  const UnitQuat y90 = UnitQuat::from_axis_angle({0, 1, 0}, M_PI / 2.0);
  CHECK(geom::euler_xyz_delta(y90, UnitQuat::identity()).gimbal_adjacent);
  CHECK_FALSE(w.gimbal_adjacent);
}

TEST_CASE("canonical quaternions keep w nonnegative and unit norm") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuat q = UnitQuat::random(rng);
    CHECK(q.w >= 0.0);
    CHECK(std::abs(q.norm() - 1.0) < 1e-9);
  }
}

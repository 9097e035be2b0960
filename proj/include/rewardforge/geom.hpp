#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rewardforge/rng.hpp"

namespace rewardforge::geom {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
    return {x / n, y / n, z / n};
  }
};

// Unit quaternion, canonical form keeps w >= 0.
struct UnitQuat {
  double x = 0.0, y = 0.0, z = 0.0, w = 1.0;

  static UnitQuat identity() { return {0.0, 0.0, 0.0, 1.0}; }

  static UnitQuat from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = axis.normalized();
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return UnitQuat{u.x * s, u.y * s, u.z * s, std::cos(h)}.canonical();
  }

  // Uniform random rotation (Shoemake subgroup algorithm).
  static UnitQuat random(Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    return UnitQuat{a * std::sin(2.0 * M_PI * u2), a * std::cos(2.0 * M_PI * u2),
                    b * std::sin(2.0 * M_PI * u3), b * std::cos(2.0 * M_PI * u3)}
        .canonical();
  }

  double norm() const { return std::sqrt(x * x + y * y + z * z + w * w); }

  UnitQuat normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n, w / n};
  }

  UnitQuat canonical() const {
    const UnitQuat q = normalized();
    if (q.w < 0.0) return {-q.x, -q.y, -q.z, -q.w};
    return q;
  }

  UnitQuat conjugate() const { return {-x, -y, -z, w}; }

  Vec3 vec() const { return {x, y, z}; }
};

// Hamilton product, renormalized.
inline UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b) {
  return UnitQuat{a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                  a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                  a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
                  a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z}
      .normalized();
}

inline Vec3 quat_rotate(const UnitQuat& q, const Vec3& v) {
  const Vec3 u = q.vec();
  const Vec3 t = u.cross(v) * 2.0;
  return v + t * q.w + u.cross(t);
}

inline Vec3 quat_rotate_inverse(const UnitQuat& q, const Vec3& v) {
  return quat_rotate(q.conjugate(), v);
}

// Geodesic angle between two orientations, in [0, pi].
inline double rot_dist(const UnitQuat& a, const UnitQuat& b) {
  const UnitQuat d = quat_mul(a, b.conjugate());
  return 2.0 * std::asin(std::min(d.vec().norm(), 1.0));
}

// Angle between a commanded axis and the current one, in [0, pi].
inline double axis_deviation(const Vec3& target, const Vec3& current) {
  const double tn = target.norm();
  const double cn = current.norm();
  if (tn == 0.0 || cn == 0.0)
    throw std::domain_error("axis_deviation: zero-norm axis");
  const double c = std::clamp(target.dot(current) / (tn * cn), -1.0, 1.0);
  return std::acos(c);
}

// 1 / (e^{scale x} + eps + e^{-scale x}); peak 1/(2+eps) at x = 0.
inline double lgsk_kernel(double x, double scale, double eps) {
  return 1.0 / (std::exp(scale * x) + eps + std::exp(-scale * x));
}

struct KeypointSet {
  std::vector<Vec3> points;
};

// point_i = pos + rotate(orn, basis_i * kp_dist)
inline KeypointSet keypoints(const Vec3& pos, const UnitQuat& orn,
                             const std::vector<Vec3>& basis, double kp_dist) {
  if (basis.empty())
    throw std::invalid_argument("keypoints: empty basis");
  KeypointSet out;
  out.points.reserve(basis.size());
  for (const Vec3& b : basis) out.points.push_back(pos + quat_rotate(orn, b * kp_dist));
  return out;
}

inline double mean_keypoint_distance(const KeypointSet& a, const KeypointSet& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    acc += (a.points[i] - b.points[i]).norm();
  return acc / static_cast<double>(a.points.size());
}

inline std::vector<Vec3> default_keypoint_basis() {
  return {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
}

inline double wrap_to_pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

struct EulerDelta {
  Vec3 angles;            // intrinsic XYZ, each wrapped to (-pi, pi]
  bool gimbal_adjacent = false;
};

// XYZ Euler angles of a * conj(b).
inline EulerDelta euler_xyz_delta(const UnitQuat& a, const UnitQuat& b) {
  const UnitQuat q = quat_mul(a, b.conjugate());
  const double sinp = std::clamp(2.0 * (q.w * q.y - q.z * q.x), -1.0, 1.0);
  EulerDelta out;
  out.angles.x = wrap_to_pi(
      std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y)));
  out.angles.y = wrap_to_pi(std::asin(sinp));
  out.angles.z = wrap_to_pi(
      std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z)));
  out.gimbal_adjacent = std::abs(std::abs(out.angles.y) - 0.5 * M_PI) < 1e-6;
  return out;
}

}  // namespace rewardforge::geom

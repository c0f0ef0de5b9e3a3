#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "demoforge/error.hpp"

namespace demoforge {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Hamilton quaternion stored in (w, x, y, z) order.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion negated() const { return {-w, -x, -y, -z}; }
  Vec3 vec() const { return {x, y, z}; }

  bool finite() const { return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

inline Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline double dot(const Quaternion& a, const Quaternion& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }

/// Rotates v by the unit quaternion q.
inline Vec3 rotate(const Quaternion& q, const Vec3& v) {
  const Vec3 u = q.vec();
  const Vec3 uv = cross(u, v);
  const Vec3 uuv = cross(u, uv);
  return v + 2.0 * (q.w * uv + uuv);
}

/// Representative of {q, -q} with w >= 0. For w == 0 the first nonzero
/// vector component is made positive.
inline Quaternion canonical(const Quaternion& q) {
  if (q.w < 0.0) return q.negated();
  if (q.w == 0.0) {
    for (double c : {q.x, q.y, q.z}) {
      if (c < 0.0) return q.negated();
      if (c > 0.0) break;
    }
  }
  return q;
}

/// Geodesic angle in radians between the rotations represented by a and b.
inline double angular_distance(const Quaternion& a, const Quaternion& b) {
  const Quaternion d = a.conjugate() * b;
  return 2.0 * std::atan2(norm(d.vec()), std::abs(d.w));
}

/// Rigid transform: translation in meters plus unit-quaternion rotation.
/// The quaternion is renormalized on construction; non-finite input throws.
class Pose {
 public:
  Pose() = default;

  Pose(const Vec3& translation, const Quaternion& rotation) : translation_(translation) {
    for (double c : translation)
      if (!std::isfinite(c)) fail(ErrorCode::InvalidPose, "non-finite translation");
    if (!rotation.finite()) fail(ErrorCode::InvalidPose, "non-finite rotation");
    const double n = rotation.norm();
    if (n < 1e-12) fail(ErrorCode::InvalidPose, "zero-norm quaternion");
    rotation_ = n == 1.0 ? rotation : Quaternion{rotation.w / n, rotation.x / n, rotation.y / n, rotation.z / n};
  }

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return Pose(t, Quaternion::identity()); }

  /// Rotation of `angle` radians about `axis` (need not be unit) followed by `t`.
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = {0, 0, 0}) {
    const double n = norm(axis);
    if (!(n > 0.0) || !std::isfinite(angle)) fail(ErrorCode::InvalidPose, "degenerate axis-angle");
    const double s = std::sin(angle / 2.0) / n;
    return Pose(t, Quaternion{std::cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s});
  }

  const Vec3& translation() const { return translation_; }
  const Quaternion& rotation() const { return rotation_; }

  /// Maps a point expressed in this pose's local frame into the parent frame.
  Vec3 apply(const Vec3& p) const { return translation_ + rotate(rotation_, p); }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  Vec3 translation_{0.0, 0.0, 0.0};
  Quaternion rotation_{};
};

struct StampedPose {
  std::int64_t t_ns = 0;
  Pose pose;
};

/// "a then b in a's frame": the transform x -> a(b(x)).
inline Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.translation() + rotate(a.rotation(), b.translation()), a.rotation() * b.rotation());
}

inline Pose inverse(const Pose& p) {
  const Quaternion qi = p.rotation().conjugate();
  const Vec3 t = rotate(qi, p.translation());
  return Pose({-t[0], -t[1], -t[2]}, qi);
}

/// Linear in translation, shortest-arc slerp in rotation.
inline Pose interpolate(const Pose& a, const Pose& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::OutOfRange, "interpolation alpha outside [0,1]");
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;

  // a + alpha (b - a) keeps equal components bit-exact.
  const Vec3 t = a.translation() + alpha * (b.translation() - a.translation());

  const Quaternion& qa = a.rotation();
  Quaternion qb = b.rotation();
  double cos_theta = dot(qa, qb);
  if (cos_theta < 0.0) {
    qb = qb.negated();
    cos_theta = -cos_theta;
  }
  if (qa.w == qb.w && qa.x == qb.x && qa.y == qb.y && qa.z == qb.z) return Pose(t, qa);
  double wa = 1.0 - alpha;
  double wb = alpha;
  if (cos_theta < 1.0 - 1e-12) {
    const double theta = std::acos(std::min(cos_theta, 1.0));
    const double s = std::sin(theta);
    wa = std::sin((1.0 - alpha) * theta) / s;
    wb = std::sin(alpha * theta) / s;
  }
  return Pose(t, Quaternion{wa * qa.w + wb * qb.w, wa * qa.x + wb * qb.x, wa * qa.y + wb * qb.y,
                            wa * qa.z + wb * qb.z});
}

/// Samples `stream` at every target timestamp. Targets equal to a stream
/// timestamp return that sample unchanged; targets outside the stream span
/// are refused rather than clamped.
inline std::vector<Pose> resample_poses(std::span<const StampedPose> stream, std::span<const std::int64_t> targets) {
  for (std::size_t k = 1; k < stream.size(); ++k)
    if (stream[k].t_ns <= stream[k - 1].t_ns) fail(ErrorCode::InvalidPose, "pose stream timestamps not strictly increasing");

  std::vector<Pose> out;
  out.reserve(targets.size());
  for (std::int64_t t : targets) {
    if (stream.empty() || t < stream.front().t_ns || t > stream.back().t_ns)
      fail(ErrorCode::ExtrapolationRefused, "target " + std::to_string(t) + " ns outside pose stream");
    auto it = std::lower_bound(stream.begin(), stream.end(), t,
                               [](const StampedPose& s, std::int64_t v) { return s.t_ns < v; });
    if (it->t_ns == t) {
      out.push_back(it->pose);
      continue;
    }
    const StampedPose& hi = *it;
    const StampedPose& lo = *(it - 1);
    const double alpha = static_cast<double>(t - lo.t_ns) / static_cast<double>(hi.t_ns - lo.t_ns);
    out.push_back(interpolate(lo.pose, hi.pose, alpha));
  }
  return out;
}

}  // namespace demoforge

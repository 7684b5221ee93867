#pragma once

#include <array>
#include <cmath>
#include <iosfwd>

namespace mts {

/// Cartesian 3-vector. Positions are in meters unless a field says otherwise.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Returns the zero vector unchanged.
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : v;
}

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

std::ostream& operator<<(std::ostream& os, const Vec3& v);

/// Unit quaternion rotation (w, x, y, z). For a camera pose it maps camera-frame
/// vectors into the world frame.
class Rotation {
 public:
  /// Identity.
  constexpr Rotation() = default;

  /// Normalizes the given components; a zero quaternion becomes the identity.
  static Rotation from_quaternion(double w, double x, double y, double z);
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  /// Columns are the images of the frame's x, y and z axes. The matrix must be
  /// orthonormal with determinant +1.
  static Rotation from_matrix(const std::array<std::array<double, 3>, 3>& m);
  /// Smallest rotation taking direction `from` onto direction `to`.
  static Rotation between(const Vec3& from, const Vec3& to);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  double quaternion_norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

  Vec3 rotate(const Vec3& v) const;
  Vec3 operator*(const Vec3& v) const { return rotate(v); }
  /// Composition: (a * b)(v) == a(b(v)).
  Rotation operator*(const Rotation& o) const;
  Rotation inverse() const { return {w_, -x_, -y_, -z_}; }
  std::array<std::array<double, 3>, 3> matrix() const;

  friend bool operator==(const Rotation&, const Rotation&) = default;

 private:
  constexpr Rotation(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Camera (end-effector) pose: position in the world frame and camera-to-world
/// orientation. Camera frame: +z optical axis, +x image right, +y image down.
struct Pose {
  Vec3 position;
  Rotation orientation;

  Vec3 to_world(const Vec3& camera_point) const { return position + orientation.rotate(camera_point); }
  Vec3 to_camera(const Vec3& world_point) const { return orientation.inverse().rotate(world_point - position); }
  Vec3 optical_axis() const { return orientation.rotate({0.0, 0.0, 1.0}); }

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// World vertical; camera images are kept upright with respect to it.
inline constexpr Vec3 kWorldUp{0.0, 0.0, 1.0};

/// Orientation whose optical axis is `forward` and whose image-down axis lies
/// in the plane spanned by `forward` and -`up`. Falls back to world x as the
/// reference when `forward` is parallel to `up`.
Rotation look_along(const Vec3& forward, const Vec3& up = kWorldUp);

inline Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = kWorldUp) {
  return {eye, look_along(target - eye, up)};
}

}  // namespace mts

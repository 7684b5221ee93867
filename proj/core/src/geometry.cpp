#include "mts/geometry.hpp"
#include "mts/json_support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace mts {

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
  return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) return {};
  // Components already unit to rounding are kept, so normalizing is idempotent
  // and serialized poses read back bit-exactly. Canonical sign keeps them unique.
  const double scale = std::abs(n - 1.0) <= 8 * std::numeric_limits<double>::epsilon() ? 1.0 : 1.0 / n;
  const double s = w < 0.0 ? -scale : scale;
  return {w * s, x * s, y * s, z * s};
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = normalized(axis);
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return from_quaternion(std::cos(h), a.x * s, a.y * s, a.z * s);
}

Rotation Rotation::from_matrix(const std::array<std::array<double, 3>, 3>& m) {
  // Shepperd's method: pick the largest diagonal combination for stability.
  const double trace = m[0][0] + m[1][1] + m[2][2];
  double w, x, y, z;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    w = 0.25 * s;
    x = (m[2][1] - m[1][2]) / s;
    y = (m[0][2] - m[2][0]) / s;
    z = (m[1][0] - m[0][1]) / s;
  } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]);
    w = (m[2][1] - m[1][2]) / s;
    x = 0.25 * s;
    y = (m[0][1] + m[1][0]) / s;
    z = (m[0][2] + m[2][0]) / s;
  } else if (m[1][1] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]);
    w = (m[0][2] - m[2][0]) / s;
    x = (m[0][1] + m[1][0]) / s;
    y = 0.25 * s;
    z = (m[1][2] + m[2][1]) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]);
    w = (m[1][0] - m[0][1]) / s;
    x = (m[0][2] + m[2][0]) / s;
    y = (m[1][2] + m[2][1]) / s;
    z = 0.25 * s;
  }
  return from_quaternion(w, x, y, z);
}

Rotation Rotation::between(const Vec3& from, const Vec3& to) {
  const Vec3 a = normalized(from);
  const Vec3 b = normalized(to);
  const double c = dot(a, b);
  if (c < -1.0 + 1e-12) {
    // Antiparallel: any axis orthogonal to `a` works.
    Vec3 axis = cross(a, {1.0, 0.0, 0.0});
    if (norm(axis) < 1e-6) axis = cross(a, {0.0, 1.0, 0.0});
    return from_axis_angle(axis, std::numbers::pi);
  }
  const Vec3 v = cross(a, b);
  return from_quaternion(1.0 + c, v.x, v.y, v.z);
}

Vec3 Rotation::rotate(const Vec3& v) const {
  // v' = v + 2w (q x v) + 2 q x (q x v)
  const Vec3 q{x_, y_, z_};
  const Vec3 t = 2.0 * cross(q, v);
  return v + w_ * t + cross(q, t);
}

Rotation Rotation::operator*(const Rotation& o) const {
  return from_quaternion(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                         w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                         w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                         w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
}

std::array<std::array<double, 3>, 3> Rotation::matrix() const {
  const Vec3 c0 = rotate({1.0, 0.0, 0.0});
  const Vec3 c1 = rotate({0.0, 1.0, 0.0});
  const Vec3 c2 = rotate({0.0, 0.0, 1.0});
  return {{{c0.x, c1.x, c2.x}, {c0.y, c1.y, c2.y}, {c0.z, c1.z, c2.z}}};
}

Rotation look_along(const Vec3& forward, const Vec3& up) {
  const Vec3 f = normalized(forward);
  Vec3 down = -normalized(up);
  if (norm(cross(down, f)) < 1e-9) down = {1.0, 0.0, 0.0};
  const Vec3 right = normalized(cross(down, f));
  const Vec3 image_down = cross(f, right);
  return Rotation::from_matrix({{{right.x, image_down.x, f.x},
                                 {right.y, image_down.y, f.y},
                                 {right.z, image_down.z, f.z}}});
}

// JSON

void to_json(nlohmann::json& j, const Vec3& v) { j = nlohmann::json::array({v.x, v.y, v.z}); }

void from_json(const nlohmann::json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw nlohmann::json::type_error::create(302, "Vec3 must be a 3-element array", &j);
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void to_json(nlohmann::json& j, const Rotation& r) { j = nlohmann::json::array({r.w(), r.x(), r.y(), r.z()}); }

void from_json(const nlohmann::json& j, Rotation& r) {
  if (!j.is_array() || j.size() != 4) throw nlohmann::json::type_error::create(302, "quaternion must be a 4-element array", &j);
  r = Rotation::from_quaternion(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

void to_json(nlohmann::json& j, const Pose& p) { j = {{"position", p.position}, {"orientation", p.orientation}}; }

void from_json(const nlohmann::json& j, Pose& p) {
  j.at("position").get_to(p.position);
  j.at("orientation").get_to(p.orientation);
}

}  // namespace mts
